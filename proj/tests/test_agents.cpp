#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "altgrad/agents.hpp"

using namespace altgrad;

namespace {
Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}
}  // namespace

TEST_CASE("gradient noise injection") {
  RngStream rng(1, 0);
  GradEstimate g{v3(1, 2, 3), EstimatorKind::Regular};
  CHECK(inject_gradient_noise(g, 0.0, rng).g == g.g);
  CHECK_THROWS_AS(inject_gradient_noise(g, -1.0, rng), DomainError);

  const int n = 100000;
  Vec s = Vec::Zero(3);
  Mat ss = Mat::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    Vec x = inject_gradient_noise({Vec::Zero(3), EstimatorKind::Alternate}, 1.0, rng).g;
    s += x;
    ss += x * x.transpose();
  }
  Vec mean = s / n;
  Mat cov = ss / n - mean * mean.transpose();
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(mean[i]) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(cov(i, i) - 1.0) < 0.03);
    for (int j = 0; j < i; ++j) CHECK(std::abs(cov(i, j)) < 4.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("gradient bandit runs are deterministic and structural") {
  BanditTask task(v3(0, 0, 1), 1.0);
  AgentConfig cfg;
  cfg.estimator = EstimatorKind::Alternate;
  cfg.alpha = 0.5;
  cfg.baseline = {BaselineMode::Learned, 0.0, 0.25};
  RngStream a(9, 0), b(9, 0);
  auto la = gradient_bandit_run(task, cfg, v3(10, 0, 0), 200, a, true);
  auto lb = gradient_bandit_run(task, cfg, v3(10, 0, 0), 200, b, true);
  CHECK(la.J == lb.J);
  CHECK(la.b == lb.b);
  Vec prev = v3(10, 0, 0);
  for (const Vec& th : la.theta) {
    CHECK(((th - prev).array() != 0.0).count() <= 1);
    prev = th;
  }

  // the expected-gradient agent has no randomness at all and ascends J for small alpha
  cfg.estimator = EstimatorKind::Expected;
  cfg.alpha = 0.1;
  RngStream c(1, 0), d(2, 0);
  auto e1 = gradient_bandit_run(task, cfg, Vec::Zero(3), 100, c);
  auto e2 = gradient_bandit_run(task, cfg, Vec::Zero(3), 100, d);
  CHECK(e1.J == e2.J);
  for (std::size_t t = 1; t < e1.J.size(); ++t) CHECK(e1.J[t] >= e1.J[t - 1]);

  // true-value baseline logs r_pi
  cfg.estimator = EstimatorKind::Regular;
  cfg.baseline.mode = BaselineMode::TrueValue;
  RngStream e(3, 0);
  auto lt = gradient_bandit_run(task, cfg, Vec::Zero(3), 20, e);
  CHECK(lt.b == lt.J);

  // a frozen baseline never moves
  cfg.baseline = {BaselineMode::Frozen, 4.0, 0.5};
  RngStream f(4, 0);
  auto lf = gradient_bandit_run(task, cfg, Vec::Zero(3), 20, f);
  for (double x : lf.b) CHECK(x == 4.0);
}

TEST_CASE("REINFORCE estimators agree in expectation on the chain") {
  // single-episode estimates from the same policy, averaged over many seeded episodes
  TabularMdpModel model = chain_model(2);
  Mat theta(5, 2);
  theta << 0.2, -0.1, 0.0, 0.3, -0.4, 0.1, 0.5, 0.0, 0.1, 0.2;
  TabularSoftmaxPolicy pol(theta);
  Vec v = exact_values(model, policy_table(pol)).v;
  Mat exact = exact_policy_gradient(model, pol);
  ChainEnv env(1.0);
  FeatureMap phi = FeatureMap::one_hot(5);
  const int n = 100000;
  Mat sum_r = Mat::Zero(5, 2), sum_a = Mat::Zero(5, 2), sq_r = Mat::Zero(5, 2), sq_a = Mat::Zero(5, 2);
  RngStream rng(5, 0);
  for (int i = 0; i < n; ++i) {
    RngStream ep = rng.split(i);
    Trajectory tr = run_episode(env, pol, phi, ep);
    auto g = tr.returns(0.9);
    Mat er = Mat::Zero(5, 2), ea = Mat::Zero(5, 2);
    double disc = 1.0;
    for (std::size_t t = 0; t < tr.actions.size(); ++t) {
      int s = tr.states[t].index;
      double adv = disc * (g[t] - v[s]);
      SparseFeatures x = phi(tr.states[t]);
      er.row(s) += adv * pol.score_coeff(x, tr.actions[t], EstimatorKind::Regular).transpose();
      ea.row(s) += adv * pol.score_coeff(x, tr.actions[t], EstimatorKind::Alternate).transpose();
      disc *= 0.9;
    }
    sum_r += er;
    sum_a += ea;
    sq_r += er.cwiseProduct(er);
    sq_a += ea.cwiseProduct(ea);
  }
  Mat mr = sum_r / n, ma = sum_a / n;
  Mat se_r = ((sq_r / n - mr.cwiseProduct(mr)) / n).cwiseSqrt();
  Mat se_a = ((sq_a / n - ma.cwiseProduct(ma)) / n).cwiseSqrt();
  for (int s = 0; s < 5; ++s) {
    for (int a = 0; a < 2; ++a) {
      double comb = std::sqrt(se_r(s, a) * se_r(s, a) + se_a(s, a) * se_a(s, a));
      CHECK(std::abs(mr(s, a) - ma(s, a)) < 3 * comb);
      CHECK(std::abs(mr(s, a) - exact(s, a)) < 3 * se_r(s, a) + 1e-12);
      CHECK(std::abs(ma(s, a) - exact(s, a)) < 3 * se_a(s, a) + 1e-12);
    }
  }
}

TEST_CASE("Monte-Carlo critic converges for a fixed policy") {
  AgentConfig cfg;
  cfg.estimator = EstimatorKind::Regular;
  cfg.alpha = 0.0;
  cfg.baseline = {BaselineMode::Learned, 0.0, 0.002};
  TabularSoftmaxPolicy pol(5, 2);
  CriticState critic(5, 0.002, 0.0);
  ChainEnv env(1.0);
  RngStream rng(6, 0);
  const int episodes = 40000;
  EpisodeLog log = reinforce_run(env, pol, FeatureMap::one_hot(5), critic, cfg, episodes, rng,
                                 nullptr, true);
  // the EWMA keeps jittering with the terminal reward noise; its running average settles
  Vec avg = Vec::Zero(5);
  for (int i = episodes / 2; i < episodes; ++i) avg += log.value_table[i];
  avg /= episodes / 2;
  Vec v = exact_values(chain_model(2), Mat::Constant(5, 2, 0.5)).v;
  CHECK((avg - v).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("tabular ALT only touches taken (state, action) entries") {
  AgentConfig cfg;
  cfg.estimator = EstimatorKind::Alternate;
  cfg.alpha = 0.1;
  cfg.baseline = {BaselineMode::Learned, 0.0, 0.1};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TabularSoftmaxPolicy pol(5, 2);
    TabularSoftmaxPolicy probe_pol(5, 2);
    CriticState critic(5, 0.1, 0.0);
    RngStream rng(seed, 0);
    // replay the episode the agent will see
    RngStream peek = rng.split(1000);
    ChainEnv probe(1.0);
    Trajectory tr = run_episode(probe, probe_pol, FeatureMap::one_hot(5), peek);
    Mat taken = Mat::Zero(5, 2);
    for (std::size_t t = 0; t < tr.actions.size(); ++t) taken(tr.states[t].index, tr.actions[t]) = 1;

    ChainEnv env(1.0);
    EpisodeLog log = reinforce_run(env, pol, FeatureMap::one_hot(5), critic, cfg, 1, rng);
    CHECK(log.lengths[0] == static_cast<long>(tr.actions.size()));
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 2; ++a)
        if (taken(s, a) == 0) CHECK(pol.weights()(s, a) == 0.0);
  }
}

TEST_CASE("expected policy gradient on the chain") {
  AgentConfig cfg;
  cfg.estimator = EstimatorKind::Expected;
  cfg.alpha = std::ldexp(1.0, -6);
  RngStream rng(8, 0);
  TabularSoftmaxPolicy uni(5, 2);
  auto log = chain_expected_pg_run(ChainEnv(1.0), uni, cfg, 100, rng);
  for (std::size_t i = 1; i < log.exact_J.size(); ++i) CHECK(log.exact_J[i] >= log.exact_J[i - 1]);

  Mat sat = Mat::Zero(5, 2);
  sat.col(0).setConstant(3.0);
  TabularSoftmaxPolicy left(sat);
  double j0 = exact_objective(chain_model(2), policy_table(left));
  auto l2 = chain_expected_pg_run(ChainEnv(1.0), left, cfg, 100, rng);
  CHECK(l2.exact_J.back() - j0 < 0.01);
  CHECK(l2.exact_J.back() > j0);

  CHECK_THROWS_AS(chain_expected_pg_run(MountainCarEnv(), uni, cfg, 1, rng), UnsupportedError);
}

TEST_CASE("online actor-critic smoke run") {
  RngStream crng(9, 0);
  MountainCarEnv env;
  TileCoder coder = make_coder(env.spec().bounds, 4, 8, crng);
  AgentConfig cfg;
  cfg.estimator = EstimatorKind::Alternate;
  cfg.alpha = 0.125;
  cfg.tau = 0.1;
  cfg.baseline = {BaselineMode::Learned, 0.0, 0.5};
  auto run = [&] {
    LinearSoftmaxPolicy pol(coder.dim(), 3);
    CriticState critic(coder.dim(), 0.5, 0.0);
    MountainCarEnv e;
    RngStream rng(10, 0);
    return online_ac_run(e, pol, FeatureMap::tiles(coder), critic, cfg, 5000, rng);
  };
  EpisodeLog a = run(), b = run();
  CHECK(a.returns == b.returns);
  CHECK(a.end_step.back() == 5000);
  long total = 0;
  for (long l : a.lengths) {
    CHECK(l <= 1000);
    total += l;
  }
  CHECK(total == 5000);
  for (double h : a.entropy) {
    CHECK(h >= 0.0);
    CHECK(h <= std::log(3.0) + 1e-12);
  }
  TabularSoftmaxPolicy tab(5, 2);
  CriticState c(5, 0.1, 0.0);
  ChainEnv chain(1.0);
  cfg.baseline.mode = BaselineMode::TrueValue;
  RngStream rng(11, 0);
  CHECK_THROWS_AS(online_ac_run(chain, tab, FeatureMap::one_hot(5), c, cfg, 10, rng), UnsupportedError);
}
