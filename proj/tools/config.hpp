#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "altgrad/experiments.hpp"

namespace altgrad::cli {

// A sweep axis: values plus the labels used in cell ids.
struct Axis {
  std::vector<double> values;
  std::vector<std::string> labels;
};

struct AgentSpec {
  EstimatorKind estimator;
  BaselineMode baseline;
};

enum class SweepKind { Bandit, Chain, Ac };

struct SweepConfig {
  SweepKind kind;
  std::string experiment;
  int runs = 1;
  long steps = 0;  // bandit steps, chain episodes, or actor-critic steps
  std::uint64_t seed = 0;

  std::vector<AgentSpec> agents;
  std::vector<std::pair<std::string, Vec>> inits;  // bandit and chain only
  Axis alpha, beta, b0, tau, grad_noise, p;

  BanditTask task;  // bandit

  std::string env;  // chain | hard_chain | mountaincar | acrobot | dotreacher
  double env_noise = 1.0;
  bool exact_metric = false;

  long switch_at = -1;
  std::string policy = "softmax";
  int tiles = 4;
  int tilings = 8;
};

struct FixedPointCase {
  std::string name;
  double b = 0.0;
  double alpha = 0.0;
  bool half_bound = false;  // alpha_t = max_attractor_stepsize(pi_t) / 2
};

struct FixedPointConfig {
  std::string experiment;
  BanditTask task;
  Vec theta0;
  int steps = 100;
  std::vector<FixedPointCase> cases;
  bool has_inequality = false;
  Vec ineq_pi;
  Axis ineq_b, ineq_alpha;
};

struct SimplexConfig {
  std::string experiment;
  BanditTask task;
  FieldOptions field;
};

struct TreeBenchConfig {
  std::string experiment = "tree_bench";
  std::vector<int> ns;
  int ops = 20000;
  std::uint64_t seed = 1;
};

SweepConfig parse_sweep(const YAML::Node& root, SweepKind kind);
FixedPointConfig parse_fixed_point(const YAML::Node& root);
SimplexConfig parse_simplex(const YAML::Node& root);
TreeBenchConfig parse_tree_bench(const YAML::Node& root);

// Expands the grid into cells, in a fixed order.
std::vector<BanditCell> bandit_cells(const SweepConfig& c);
std::vector<ChainCell> chain_cells(const SweepConfig& c);
std::vector<AcCell> ac_cells(const SweepConfig& c);

}  // namespace altgrad::cli
