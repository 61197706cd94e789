#pragma once

#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "altgrad/numerics.hpp"

namespace altgrad {

struct BanditTask {
  Vec rewards;
  double noise_std = 0.0;
  std::optional<Vec> action_noise_std;  // per-action sigma; falls back to noise_std

  BanditTask() = default;
  BanditTask(Vec r, double sigma);
  BanditTask(Vec r, Vec sigmas);

  int num_actions() const { return static_cast<int>(rewards.size()); }
  double sigma(int a) const;
  Vec sigmas() const;
};

enum class EstimatorKind { Expected, Regular, Alternate };

const char* to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& s);

struct GradEstimate {
  Vec g;
  EstimatorKind kind;
};

struct BaselineState {
  double b = 0.0;
  double beta = 1.0;
  bool frozen = false;
};

double pull(const BanditTask& task, int a, RngStream& rng);

GradEstimate expected_gradient(const PolicyVector& pi, const BanditTask& task);
GradEstimate regular_estimate(int a, double reward, const PolicyVector& pi, double b);
GradEstimate alternate_estimate(int a, double reward, double b, int num_actions);

// Element-wise Var[(e_A - eta)(R - b)] for A ~ pi, R ~ task.
// eta = pi gives the regular estimator, eta = 0 the alternate one.
Vec estimator_variance(const PolicyVector& pi, const BanditTask& task, double b, const Vec& eta);

// Fixed points of theta <- theta + alpha * pi (r - b).
struct NoFixedPoint {};
struct SimplexFace {
  std::vector<int> actions;  // every policy supported on these actions is fixed
};
struct InteriorFixedPoint {
  PolicyVector pi;
};
using FixedPointResult = std::variant<NoFixedPoint, SimplexFace, InteriorFixedPoint>;

constexpr double kBaselineTieTol = 1e-9;

FixedPointResult biased_fixed_point(const BanditTask& task, double b);
PreferenceVector biased_update_step(const PreferenceVector& prefs, const BanditTask& task,
                                    double b, double alpha);
double max_attractor_stepsize(const PolicyVector& pi, const BanditTask& task, double b);

struct InequalityTerms {
  double lhs_log_term;     // log sum pi exp(pi zeta)
  double lower_bound;      // sum pi^2 zeta
  double upper_bound;      // (u - l)^2 / 8 + sum pi^2 zeta
  double rhs_inverse_sum;  // (sum 1/zeta)^-1
};

InequalityTerms figure_b3_quantities(const PolicyVector& pi, const BanditTask& task, double b,
                                     double alpha);

BaselineState update_baseline(BaselineState s, double reward);

double bandit_objective(const PolicyVector& pi, const BanditTask& task);

// Simplex update field for 3-armed tasks.
enum class FieldBaseline { TrueValue, Fixed };

struct FieldOptions {
  EstimatorKind estimator = EstimatorKind::Regular;
  FieldBaseline baseline = FieldBaseline::TrueValue;
  double fixed_b = 0.0;
  double alpha = 0.4;
  double noise = 1.0;  // magnitude of the +/- reward perturbation
  int resolution = 20;  // lattice points per edge
};

struct FieldRow {
  int point_id;
  Vec pi;
  int sampled_action;  // -1 marks the expected update
  int noise_sign;      // +1, -1, or 0 for the expected update
  Vec dtheta;          // preference change
  Vec dpi;             // induced policy change
  Vec var;             // per-action estimator variance at this point
};

std::vector<FieldRow> simplex_field(const BanditTask& task, const FieldOptions& opt);
void write_simplex_field_csv(std::ostream& out, const std::vector<FieldRow>& rows);

}  // namespace altgrad
