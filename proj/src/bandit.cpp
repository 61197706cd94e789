#include "altgrad/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <string>

namespace altgrad {

BanditTask::BanditTask(Vec r, double sigma) : rewards(std::move(r)), noise_std(sigma) {
  if (rewards.size() == 0) throw DimensionError("bandit needs at least one arm");
  if (!rewards.allFinite()) throw DomainError("bandit rewards must be finite");
  if (!(sigma >= 0.0)) throw DomainError("bandit noise_std must be >= 0");
}

BanditTask::BanditTask(Vec r, Vec sigmas) : BanditTask(std::move(r), 0.0) {
  if (sigmas.size() != rewards.size()) throw DimensionError("per-action sigma length mismatch");
  if ((sigmas.array() < 0.0).any()) throw DomainError("per-action sigma must be >= 0");
  action_noise_std = std::move(sigmas);
}

double BanditTask::sigma(int a) const {
  return action_noise_std ? (*action_noise_std)[a] : noise_std;
}

Vec BanditTask::sigmas() const {
  return action_noise_std ? *action_noise_std : Vec::Constant(rewards.size(), noise_std);
}

const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Expected: return "EXPECTED";
    case EstimatorKind::Regular: return "REG";
    case EstimatorKind::Alternate: return "ALT";
  }
  return "?";
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "EXPECTED") return EstimatorKind::Expected;
  if (s == "REG") return EstimatorKind::Regular;
  if (s == "ALT") return EstimatorKind::Alternate;
  throw ConfigError("unknown estimator '" + s + "' (expected EXPECTED, REG or ALT)");
}

double pull(const BanditTask& task, int a, RngStream& rng) {
  if (a < 0 || a >= task.num_actions()) throw LookupError("pull: invalid action");
  return sample_gaussian(task.rewards[a], task.sigma(a), rng);
}

GradEstimate expected_gradient(const PolicyVector& pi, const BanditTask& task) {
  const Vec& p = pi.probs();
  double r_pi = p.dot(task.rewards);
  return {p.cwiseProduct((task.rewards.array() - r_pi).matrix()), EstimatorKind::Expected};
}

GradEstimate regular_estimate(int a, double reward, const PolicyVector& pi, double b) {
  if (a < 0 || a >= pi.size()) throw LookupError("regular_estimate: invalid action");
  Vec g = -pi.probs();
  g[a] += 1.0;
  return {(reward - b) * g, EstimatorKind::Regular};
}

GradEstimate alternate_estimate(int a, double reward, double b, int num_actions) {
  if (a < 0 || a >= num_actions) throw LookupError("alternate_estimate: invalid action");
  Vec g = Vec::Zero(num_actions);
  g[a] = reward - b;
  return {g, EstimatorKind::Alternate};
}

Vec estimator_variance(const PolicyVector& pi, const BanditTask& task, double b, const Vec& eta) {
  const Vec& p = pi.probs();
  const Vec& r = task.rewards;
  if (p.size() != r.size() || eta.size() != r.size())
    throw DimensionError("estimator_variance: size mismatch");
  Eigen::ArrayXd pa = p.array();
  Eigen::ArrayXd ra = r.array();
  Eigen::ArrayXd s2 = task.sigmas().array().square();
  Eigen::ArrayXd ea = eta.array();
  double r_pi = (pa * ra).sum();

  // grouped so that every term is exact at a simplex corner
  Eigen::ArrayXd v_eR = pa * s2 + pa * ra.square() * (1.0 - pa);
  Eigen::ArrayXd v_e = pa * (1.0 - pa);
  double v_R = (pa * s2).sum() + ((pa * ra * (ra - r_pi)).sum());
  Eigen::ArrayXd c_eR_e = pa * ra * (1.0 - pa);
  Eigen::ArrayXd c_eR_R = pa * s2 + pa * ra * (ra - r_pi);
  Eigen::ArrayXd c_e_R = pa * (ra - r_pi);

  Eigen::ArrayXd v = v_eR + v_e * b * b + v_R * ea.square() - 2.0 * c_eR_e * b -
                     2.0 * c_eR_R * ea + 2.0 * c_e_R * ea * b;
  return v.max(0.0).matrix();
}

FixedPointResult biased_fixed_point(const BanditTask& task, double b) {
  const Vec& r = task.rewards;
  std::vector<int> face;
  for (int a = 0; a < r.size(); ++a)
    if (std::abs(r[a] - b) <= kBaselineTieTol) face.push_back(a);
  if (!face.empty()) return SimplexFace{face};
  if (b > r.minCoeff() && b < r.maxCoeff()) return NoFixedPoint{};
  // every r_a - b has the same sign here
  Vec w = (r.array() - b).inverse().matrix();
  return InteriorFixedPoint{PolicyVector(w / w.sum())};
}

PreferenceVector biased_update_step(const PreferenceVector& prefs, const BanditTask& task,
                                    double b, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("biased_update_step: alpha must be > 0");
  if (prefs.size() != task.rewards.size()) throw DimensionError("biased_update_step: size");
  PolicyVector pi = softmax(prefs);
  return prefs + alpha * pi.probs().cwiseProduct((task.rewards.array() - b).matrix());
}

double max_attractor_stepsize(const PolicyVector& pi, const BanditTask& task, double b) {
  const Vec& r = task.rewards;
  if (!(b > r.maxCoeff())) throw DomainError("max_attractor_stepsize: baseline must exceed every reward");
  Eigen::ArrayXd d = r.array() - b;  // all negative
  Eigen::ArrayXd w = pi.probs().array() * d;
  double span = w.maxCoeff() - w.minCoeff();
  double gap = 1.0 / d.inverse().sum() - (pi.probs().array() * w).sum();
  if (span == 0.0) return std::numeric_limits<double>::infinity();  // already at the fixed point
  return 8.0 / (span * span) * gap;
}

InequalityTerms figure_b3_quantities(const PolicyVector& pi, const BanditTask& task, double b,
                                     double alpha) {
  Eigen::ArrayXd p = pi.probs().array();
  Eigen::ArrayXd zeta = alpha * (task.rewards.array() - b);
  Eigen::ArrayXd pz = p * zeta;
  InequalityTerms q{};
  double m = pz.maxCoeff();
  q.lhs_log_term = m + std::log((p * (pz - m).exp()).sum());
  q.lower_bound = (p * pz).sum();
  double span = pz.maxCoeff() - pz.minCoeff();
  q.upper_bound = span * span / 8.0 + q.lower_bound;
  q.rhs_inverse_sum = (zeta == 0.0).any() ? 0.0 : 1.0 / zeta.inverse().sum();
  return q;
}

BaselineState update_baseline(BaselineState s, double reward) {
  if (!s.frozen) s.b = (1.0 - s.beta) * s.b + s.beta * reward;
  return s;
}

double bandit_objective(const PolicyVector& pi, const BanditTask& task) {
  if (pi.size() != task.rewards.size()) throw DimensionError("bandit_objective: size mismatch");
  return pi.probs().dot(task.rewards);
}

namespace {

// pi_new proportional to pi * exp(dtheta); zero entries stay zero
Vec shifted_policy(const Vec& pi, const Vec& dtheta) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < pi.size(); ++i)
    if (pi[i] > 0.0) m = std::max(m, dtheta[i]);
  Vec w(pi.size());
  for (Eigen::Index i = 0; i < pi.size(); ++i)
    w[i] = pi[i] > 0.0 ? pi[i] * std::exp(dtheta[i] - m) : 0.0;
  return w / w.sum();
}

}  // namespace

std::vector<FieldRow> simplex_field(const BanditTask& task, const FieldOptions& opt) {
  if (task.num_actions() != 3) throw UnsupportedError("simplex field needs a 3-armed task");
  if (opt.resolution < 2) throw DomainError("simplex field resolution must be >= 2");
  const int n = opt.resolution - 1;
  std::vector<FieldRow> rows;
  int id = 0;
  for (int i = n; i >= 0; --i) {
    for (int j = n - i; j >= 0; --j) {
      int k = n - i - j;
      Vec p(3);
      p << double(i) / n, double(j) / n, double(k) / n;
      PolicyVector pi(p);
      double r_pi = p.dot(task.rewards);
      double b = opt.baseline == FieldBaseline::TrueValue ? r_pi : opt.fixed_b;
      Vec eta = opt.estimator == EstimatorKind::Alternate ? Vec::Zero(3) : p;
      Vec var = estimator_variance(pi, task, b, eta);

      auto emit = [&](int a, int sign, const Vec& g) {
        Vec dtheta = opt.alpha * g;
        rows.push_back(FieldRow{id, p, a, sign, dtheta, shifted_policy(p, dtheta) - p, var});
      };
      if (opt.estimator != EstimatorKind::Expected) {
        for (int a = 0; a < 3; ++a) {
          for (int sign : {+1, -1}) {
            double reward = task.rewards[a] + sign * opt.noise;
            Vec g = opt.estimator == EstimatorKind::Regular
                        ? regular_estimate(a, reward, pi, b).g
                        : alternate_estimate(a, reward, b, 3).g;
            emit(a, sign, g);
          }
        }
      }
      Vec expected = opt.estimator == EstimatorKind::Alternate
                         ? Vec(p.cwiseProduct((task.rewards.array() - b).matrix()))
                         : expected_gradient(pi, task).g;
      emit(-1, 0, expected);
      ++id;
    }
  }
  return rows;
}

void write_simplex_field_csv(std::ostream& out, const std::vector<FieldRow>& rows) {
  out << "point_id,pi0,pi1,pi2,sampled_action,noise_sign,dpi0,dpi1,dpi2,var0,var1,var2\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.point_id << ',' << r.pi[0] << ',' << r.pi[1] << ',' << r.pi[2] << ','
        << r.sampled_action << ',' << r.noise_sign << ',' << r.dpi[0] << ',' << r.dpi[1] << ','
        << r.dpi[2] << ',' << r.var[0] << ',' << r.var[1] << ',' << r.var[2] << '\n';
  }
}

}  // namespace altgrad
