#pragma once

#include <optional>
#include <vector>

#include "altgrad/analysis.hpp"
#include "altgrad/bandit.hpp"
#include "altgrad/environments.hpp"
#include "altgrad/features.hpp"
#include "altgrad/policies.hpp"

namespace altgrad {

enum class BaselineMode { TrueValue, Learned, Frozen };

const char* to_string(BaselineMode m);

struct BaselineSpec {
  BaselineMode mode = BaselineMode::Learned;
  double init = 0.0;  // initial estimate; the fixed value when frozen
  double beta = 0.1;
};

struct AgentConfig {
  EstimatorKind estimator = EstimatorKind::Alternate;
  BaselineSpec baseline;
  double alpha = 0.1;
  double tau = 0.0;  // entropy bonus weight
  double grad_noise_std = 0.0;
};

GradEstimate inject_gradient_noise(GradEstimate g, double stddev, RngStream& rng);

// ---- bandits

struct BanditRunLog {
  std::vector<double> J;        // exact objective after each step
  std::vector<double> b;        // baseline after each step
  std::vector<double> entropy;  // policy entropy after each step
  std::vector<Vec> theta;       // filled when requested
  Vec final_theta;
};

BanditRunLog gradient_bandit_run(const BanditTask& task, const AgentConfig& cfg,
                                 const PreferenceVector& init, int steps, RngStream& rng,
                                 bool record_theta = false);

// ---- episodic agents

// Maps environment states to sparse features: one-hot for discrete states, tiles otherwise.
class FeatureMap {
 public:
  static FeatureMap one_hot(int num_states);
  static FeatureMap tiles(TileCoder coder);

  SparseFeatures operator()(const EnvState& s) const;
  int dim() const;
  const std::optional<TileCoder>& coder() const { return coder_; }

 private:
  int num_states_ = 0;
  std::optional<TileCoder> coder_;
};

// Linear state-value estimate v(s) = w^T x(s). With features that sum to one,
// every weight equal to init_value makes v(s) = init_value everywhere.
struct CriticState {
  Vec w;
  double beta = 0.0;
  double init_value = 0.0;

  CriticState() = default;
  CriticState(int dim, double beta, double init_value);
  double value(const SparseFeatures& x) const { return x.dot(w); }
  void update(const SparseFeatures& x, double error);
};

struct Trajectory {
  std::vector<EnvState> states;  // S_0 .. S_{T-1}
  std::vector<int> actions;
  std::vector<double> rewards;   // R_1 .. R_T
  EnvState final_state;
  bool terminal = false;
  bool timed_out = false;

  std::vector<double> returns(double gamma) const;
};

Trajectory run_episode(Environment& env, const Policy& policy, const FeatureMap& phi,
                       RngStream& rng);

struct EpisodeLog {
  std::vector<double> returns;    // discounted with the environment's gamma
  std::vector<double> exact_J;    // chain only
  std::vector<double> entropy;    // mean policy entropy over the episode's states
  std::vector<double> baseline;   // value estimate at the episode's first state
  std::vector<long> lengths;
  std::vector<long> end_step;     // global step count when the episode ended
  std::vector<Vec> value_table;   // tabular critic snapshots, when requested
  bool last_truncated = false;    // final episode was cut by the step budget
};

// Monte-Carlo policy gradient with a state-value baseline; one policy update per episode.
// TrueValue baselines need `model` and a tabular policy.
EpisodeLog reinforce_run(Environment& env, Policy& policy, const FeatureMap& phi,
                         CriticState& critic, const AgentConfig& cfg, int episodes,
                         RngStream& rng, const TabularMdpModel* model = nullptr,
                         bool record_values = false);

// Online one-step actor-critic with a learned linear critic.
EpisodeLog online_ac_run(Environment& env, Policy& policy, const FeatureMap& phi,
                         CriticState& critic, const AgentConfig& cfg, long total_steps,
                         RngStream& rng);

// Gradient ascent on the exact objective of a tabular model.
EpisodeLog chain_expected_pg_run(const TabularMdpModel& model, TabularSoftmaxPolicy& policy,
                                 const AgentConfig& cfg, int updates, RngStream& rng);
// same, for a chain environment instance; anything else is unsupported
EpisodeLog chain_expected_pg_run(const Environment& env, TabularSoftmaxPolicy& policy,
                                 const AgentConfig& cfg, int updates, RngStream& rng);

}  // namespace altgrad
