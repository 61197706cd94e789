#include "altgrad/analysis.hpp"

#include <cmath>

#include "altgrad/environments.hpp"

namespace altgrad {

void TabularMdpModel::validate() const {
  if (num_states < 1 || num_actions < 1) throw DimensionError("mdp model: empty");
  if (mu.size() != num_states || reward.rows() != num_states || reward.cols() != num_actions)
    throw DimensionError("mdp model: shape mismatch");
  if (static_cast<int>(p.size()) != num_states) throw DimensionError("mdp model: transition rows");
  for (const auto& row : p) {
    if (static_cast<int>(row.size()) != num_actions) throw DimensionError("mdp model: actions");
    for (const auto& out : row) {
      double s = 0.0;
      for (const auto& t : out) s += t.prob;
      if (std::abs(s - 1.0) > 1e-12) throw DomainError("mdp model: transition row does not sum to 1");
    }
  }
}

TabularMdpModel chain_model(int num_actions) {
  ChainEnv env(0.0, num_actions);
  TabularMdpModel m;
  m.num_states = ChainEnv::kStates;
  m.num_actions = num_actions;
  m.gamma = env.spec().gamma;
  m.mu = Vec::Zero(m.num_states);
  m.mu[ChainEnv::kStart] = 1.0;
  m.reward = Mat::Zero(m.num_states, num_actions);
  m.p.assign(m.num_states, std::vector<std::vector<Transition>>(num_actions));
  for (int s = 0; s < m.num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      int next = a == env.right_action() ? s + 1 : s - 1;
      if (next >= m.num_states) m.reward(s, a) = 1.0;
      m.p[s][a] = {{next < 0 || next >= m.num_states ? -1 : next, 1.0}};
    }
  }
  return m;
}

namespace {

Mat induced_transitions(const TabularMdpModel& m, const Mat& pi) {
  Mat pp = Mat::Zero(m.num_states, m.num_states);
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a)
      for (const auto& t : m.p[s][a])
        if (t.next >= 0) pp(s, t.next) += pi(s, a) * t.prob;
  return pp;
}

Vec solve_checked(const Mat& a, const Vec& b) {
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw DivergenceError("policy evaluation system is singular");
  Vec x = lu.solve(b);
  if (!x.allFinite()) throw DivergenceError("policy evaluation produced non-finite values");
  return x;
}

void check_pi(const TabularMdpModel& m, const Mat& pi) {
  m.validate();
  if (pi.rows() != m.num_states || pi.cols() != m.num_actions)
    throw DimensionError("policy table shape does not match the model");
}

}  // namespace

ExactValues exact_values(const TabularMdpModel& m, const Mat& pi) {
  check_pi(m, pi);
  Mat pp = induced_transitions(m, pi);
  Vec r_pi = pi.cwiseProduct(m.reward).rowwise().sum();
  Mat a = Mat::Identity(m.num_states, m.num_states) - m.gamma * pp;
  ExactValues out;
  out.v = solve_checked(a, r_pi);
  out.q = m.reward;
  for (int s = 0; s < m.num_states; ++s)
    for (int act = 0; act < m.num_actions; ++act)
      for (const auto& t : m.p[s][act])
        if (t.next >= 0) out.q(s, act) += m.gamma * t.prob * out.v[t.next];
  return out;
}

Vec occupancy(const TabularMdpModel& m, const Mat& pi) {
  check_pi(m, pi);
  Mat pp = induced_transitions(m, pi);
  Mat a = Mat::Identity(m.num_states, m.num_states) - m.gamma * pp.transpose();
  return solve_checked(a, m.mu);
}

double exact_objective(const TabularMdpModel& m, const Mat& pi) {
  return m.mu.dot(exact_values(m, pi).v);
}

Mat policy_table(const TabularSoftmaxPolicy& policy) {
  Mat pi(policy.feature_dim(), policy.num_actions());
  for (int s = 0; s < pi.rows(); ++s) pi.row(s) = policy.distribution(s).probs().transpose();
  return pi;
}

Mat exact_policy_gradient(const TabularMdpModel& m, const TabularSoftmaxPolicy& policy) {
  Mat pi = policy_table(policy);
  ExactValues ev = exact_values(m, pi);
  Vec nu = occupancy(m, pi);
  Mat g(m.num_states, m.num_actions);
  for (int s = 0; s < m.num_states; ++s) {
    Mat jac = softmax_jacobian(PolicyVector(pi.row(s).transpose()));
    // jac is symmetric; row s of the gradient is nu(s) * J q(s, .)
    g.row(s) = nu[s] * (jac * ev.q.row(s).transpose()).transpose();
  }
  return g;
}

}  // namespace altgrad
