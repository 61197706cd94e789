#include "altgrad/agents.hpp"

#include <cmath>

#include "altgrad/sampling_tree.hpp"

namespace altgrad {

namespace {

enum Purpose : std::uint64_t { kEnvStream = 1, kActionStream, kNoiseStream, kTreeStream };

void add_weight_noise(Policy& policy, double alpha, double stddev, RngStream& rng) {
  if (stddev <= 0.0) return;
  Mat w = policy.weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] += alpha * stddev * rng.normal();
  policy.set_weights(w);
}

}  // namespace

const char* to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::TrueValue: return "true";
    case BaselineMode::Learned: return "learned";
    case BaselineMode::Frozen: return "frozen";
  }
  return "?";
}

GradEstimate inject_gradient_noise(GradEstimate g, double stddev, RngStream& rng) {
  if (stddev < 0.0) throw DomainError("gradient noise std must be >= 0");
  if (stddev == 0.0) return g;
  for (Eigen::Index i = 0; i < g.g.size(); ++i) g.g[i] += stddev * rng.normal();
  return g;
}

BanditRunLog gradient_bandit_run(const BanditTask& task, const AgentConfig& cfg,
                                 const PreferenceVector& init, int steps, RngStream& rng,
                                 bool record_theta) {
  const int k = task.num_actions();
  if (init.size() != k) throw DimensionError("initial preferences do not match the task");
  RngStream env_rng = rng.split(kEnvStream);
  RngStream act_rng = rng.split(kActionStream);
  RngStream noise_rng = rng.split(kNoiseStream);
  RngStream tree_rng = rng.split(kTreeStream);

  const bool alt = cfg.estimator == EstimatorKind::Alternate;
  std::vector<int> ids(k);
  for (int a = 0; a < k; ++a) ids[a] = a;
  std::optional<SamplingTree> tree;
  if (alt) tree = SamplingTree::build(ids, init, tree_rng);

  PreferenceVector theta = init;
  BaselineState base{cfg.baseline.init, cfg.baseline.beta, cfg.baseline.mode == BaselineMode::Frozen};
  BanditRunLog log;
  log.J.reserve(steps);
  log.b.reserve(steps);
  log.entropy.reserve(steps);

  PolicyVector pi = softmax(theta);
  for (int t = 0; t < steps; ++t) {
    double r_pi = bandit_objective(pi, task);
    double b = cfg.baseline.mode == BaselineMode::TrueValue ? r_pi : base.b;
    GradEstimate g{Vec(), cfg.estimator};
    double reward = 0.0;
    int a = -1;
    if (cfg.estimator == EstimatorKind::Expected) {
      g = expected_gradient(pi, task);
    } else {
      a = alt ? tree->sample(act_rng) : sample_categorical(pi, act_rng);
      reward = pull(task, a, env_rng);
      g = alt ? alternate_estimate(a, reward, b, k) : regular_estimate(a, reward, pi, b);
    }
    g = inject_gradient_noise(std::move(g), cfg.grad_noise_std, noise_rng);
    theta += cfg.alpha * g.g;
    if (!theta.allFinite()) throw DivergenceError("bandit preferences diverged");
    if (alt) {
      if (cfg.grad_noise_std > 0.0) {
        for (int i = 0; i < k; ++i) tree->update_preference(i, theta[i]);
      } else {
        tree->update_preference(a, theta[a]);
      }
    }
    if (cfg.estimator != EstimatorKind::Expected && cfg.baseline.mode == BaselineMode::Learned)
      base = update_baseline(base, reward);
    pi = softmax(theta);
    log.J.push_back(bandit_objective(pi, task));
    log.b.push_back(cfg.baseline.mode == BaselineMode::TrueValue ? log.J.back() : base.b);
    log.entropy.push_back(entropy(pi));
    if (record_theta) log.theta.push_back(theta);
  }
  log.final_theta = theta;
  return log;
}

FeatureMap FeatureMap::one_hot(int num_states) {
  FeatureMap f;
  f.num_states_ = num_states;
  return f;
}

FeatureMap FeatureMap::tiles(TileCoder coder) {
  FeatureMap f;
  f.coder_ = std::move(coder);
  return f;
}

SparseFeatures FeatureMap::operator()(const EnvState& s) const {
  if (coder_) return coder_->encode(s.x);
  return altgrad::one_hot(num_states_, s.index);
}

int FeatureMap::dim() const { return coder_ ? coder_->dim() : num_states_; }

CriticState::CriticState(int dim, double beta_, double init)
    : w(Vec::Constant(dim, init)), beta(beta_), init_value(init) {}

void CriticState::update(const SparseFeatures& x, double error) {
  for (std::size_t k = 0; k < x.index.size(); ++k) w[x.index[k]] += beta * error * x.value[k];
}

std::vector<double> Trajectory::returns(double gamma) const {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) g[t] = acc = rewards[t] + gamma * acc;
  return g;
}

Trajectory run_episode(Environment& env, const Policy& policy, const FeatureMap& phi,
                       RngStream& rng) {
  RngStream env_rng = rng.split(kEnvStream);
  RngStream act_rng = rng.split(kActionStream);
  Trajectory tr;
  EnvState s = env.reset(env_rng);
  while (true) {
    int a = sample_categorical(policy.distribution(phi(s)), act_rng);
    EnvStep st = env.step(a, env_rng);
    tr.states.push_back(s);
    tr.actions.push_back(a);
    tr.rewards.push_back(st.reward);
    s = st.next_state;
    if (st.terminal || st.timed_out) {
      tr.terminal = st.terminal;
      tr.timed_out = st.timed_out;
      tr.final_state = s;
      return tr;
    }
  }
}

namespace {

const TabularSoftmaxPolicy& require_tabular(const Policy& policy, const TabularMdpModel* model) {
  auto* tab = dynamic_cast<const TabularSoftmaxPolicy*>(&policy);
  if (!tab || !model) throw UnsupportedError("true-value baselines need a tabular policy and model");
  return *tab;
}

}  // namespace

EpisodeLog reinforce_run(Environment& env, Policy& policy, const FeatureMap& phi,
                         CriticState& critic, const AgentConfig& cfg, int episodes,
                         RngStream& rng, const TabularMdpModel* model, bool record_values) {
  if (cfg.estimator == EstimatorKind::Expected)
    throw UnsupportedError("REINFORCE needs a sampled estimator; use chain_expected_pg_run");
  const double gamma = env.spec().gamma;
  const bool true_v = cfg.baseline.mode == BaselineMode::TrueValue;
  const TabularSoftmaxPolicy* tab = true_v ? &require_tabular(policy, model) : nullptr;
  if (!tab) tab = dynamic_cast<const TabularSoftmaxPolicy*>(&policy);
  if (cfg.baseline.mode == BaselineMode::Frozen) critic = CriticState(phi.dim(), 0.0, cfg.baseline.init);

  RngStream noise_rng = rng.split(kNoiseStream);
  Vec v_true;
  if (true_v) v_true = exact_values(*model, policy_table(*tab)).v;
  auto baseline = [&](const EnvState& s, const SparseFeatures& x) {
    return true_v ? v_true[s.index] : critic.value(x);
  };

  EpisodeLog log;
  long global = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    RngStream ep_rng = rng.split(1000 + static_cast<std::uint64_t>(ep));
    Trajectory tr = run_episode(env, policy, phi, ep_rng);
    std::vector<double> g = tr.returns(gamma);
    const std::size_t T = tr.actions.size();
    std::vector<SparseFeatures> xs(T);
    for (std::size_t t = 0; t < T; ++t) xs[t] = phi(tr.states[t]);

    double h_sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) h_sum += entropy(policy.distribution(xs[t]));
    log.entropy.push_back(h_sum / double(T));
    log.baseline.push_back(baseline(tr.states[0], xs[0]));
    log.returns.push_back(g[0]);
    log.lengths.push_back(static_cast<long>(T));
    global += static_cast<long>(T);
    log.end_step.push_back(global);

    // every score term uses the pre-update policy
    std::vector<Vec> coeffs(T);
    double disc = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
      double adv = g[t] - baseline(tr.states[t], xs[t]);
      coeffs[t] = (disc * adv) * policy.score_coeff(xs[t], tr.actions[t], cfg.estimator);
      disc *= gamma;
    }
    for (std::size_t t = 0; t < T; ++t) policy.add_outer(xs[t], coeffs[t], cfg.alpha);
    add_weight_noise(policy, cfg.alpha, cfg.grad_noise_std, noise_rng);
    if (!policy.weights().allFinite()) throw DivergenceError("policy weights diverged");

    if (true_v) {
      v_true = exact_values(*model, policy_table(*tab)).v;
    } else if (cfg.baseline.mode == BaselineMode::Learned) {
      for (std::size_t t = 0; t < T; ++t) critic.update(xs[t], g[t] - critic.value(xs[t]));
    }
    if (model && tab) log.exact_J.push_back(exact_objective(*model, policy_table(*tab)));
    if (record_values) log.value_table.push_back(true_v ? v_true : critic.w);
  }
  return log;
}

EpisodeLog online_ac_run(Environment& env, Policy& policy, const FeatureMap& phi,
                         CriticState& critic, const AgentConfig& cfg, long total_steps,
                         RngStream& rng) {
  if (cfg.estimator == EstimatorKind::Expected)
    throw UnsupportedError("actor-critic needs a sampled estimator");
  if (cfg.baseline.mode == BaselineMode::TrueValue)
    throw UnsupportedError("actor-critic uses a learned or frozen critic");
  if (cfg.baseline.mode == BaselineMode::Frozen) critic = CriticState(phi.dim(), 0.0, cfg.baseline.init);
  const EnvSpec& spec = env.spec();
  RngStream env_rng = rng.split(kEnvStream);
  RngStream act_rng = rng.split(kActionStream);
  RngStream noise_rng = rng.split(kNoiseStream);

  EpisodeLog log;
  long t = 0;
  while (t < total_steps) {
    EnvState s = env.reset(env_rng);
    SparseFeatures x = phi(s);
    double i_gamma = 1.0;
    double ret = 0.0, disc = 1.0, h_sum = 0.0;
    long len = 0;
    bool done = false;
    log.baseline.push_back(critic.value(x));
    while (!done && t < total_steps) {
      PolicyVector pi = policy.distribution(x);
      h_sum += entropy(pi);
      int a = sample_categorical(pi, act_rng);
      EnvStep st = env.step(a, env_rng);
      ++t;
      ++len;
      ret += disc * st.reward;
      disc *= spec.gamma;
      SparseFeatures x_next;
      double v_next = 0.0;
      if (!st.terminal) {
        x_next = phi(st.next_state);
        if (!st.timed_out || spec.bootstrap_on_timeout) v_next = critic.value(x_next);
      }
      double delta = st.reward + spec.gamma * v_next - critic.value(x);
      if (!std::isfinite(delta)) throw DivergenceError("actor-critic TD error is not finite");
      Vec c = policy.score_coeff(x, a, cfg.estimator) * delta;
      if (cfg.tau > 0.0) c += cfg.tau * policy.entropy_coeff(x);
      policy.add_outer(x, c, cfg.alpha * i_gamma);
      add_weight_noise(policy, cfg.alpha, cfg.grad_noise_std, noise_rng);
      critic.update(x, delta);
      i_gamma *= spec.gamma;
      done = st.terminal || st.timed_out;
      x = std::move(x_next);
    }
    if (!policy.weights().allFinite() || !critic.w.allFinite())
      throw DivergenceError("actor-critic weights diverged");
    log.returns.push_back(ret);
    log.entropy.push_back(h_sum / double(len));
    log.lengths.push_back(len);
    log.end_step.push_back(t);
    log.last_truncated = !done;
  }
  return log;
}

EpisodeLog chain_expected_pg_run(const TabularMdpModel& model, TabularSoftmaxPolicy& policy,
                                 const AgentConfig& cfg, int updates, RngStream& rng) {
  RngStream noise_rng = rng.split(kNoiseStream);
  EpisodeLog log;
  for (int u = 0; u < updates; ++u) {
    Mat g = exact_policy_gradient(model, policy);
    Mat w = policy.weights() + cfg.alpha * g;
    policy.set_weights(w);
    add_weight_noise(policy, cfg.alpha, cfg.grad_noise_std, noise_rng);
    Mat pi = policy_table(policy);
    double j = exact_objective(model, pi);
    log.returns.push_back(j);
    log.exact_J.push_back(j);
    double h = 0.0, mass = 0.0;
    Vec nu = occupancy(model, pi);
    for (int s = 0; s < model.num_states; ++s) {
      h += nu[s] * entropy(PolicyVector(pi.row(s).transpose()));
      mass += nu[s];
    }
    log.entropy.push_back(h / mass);
    log.baseline.push_back(j);
  }
  return log;
}

EpisodeLog chain_expected_pg_run(const Environment& env, TabularSoftmaxPolicy& policy,
                                 const AgentConfig& cfg, int updates, RngStream& rng) {
  auto* chain = dynamic_cast<const ChainEnv*>(&env);
  if (!chain) throw UnsupportedError("expected policy gradient runs only on the chain family");
  return chain_expected_pg_run(chain_model(chain->spec().num_actions), policy, cfg, updates, rng);
}

}  // namespace altgrad
