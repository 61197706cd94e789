#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <set>

#include "altgrad/bandit.hpp"

using namespace altgrad;

namespace {

Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

PolicyVector random_policy(RngStream& rng, int k) {
  Vec w(k);
  for (int i = 0; i < k; ++i) w[i] = 0.05 + rng.uniform();
  return PolicyVector::normalized(w);
}

Vec random_rewards(RngStream& rng, int k) {
  Vec r(k);
  for (int i = 0; i < k; ++i) r[i] = 2.0 * rng.normal();
  return r;
}

// Exact per-component variance of (1{A=i} - eta_i)(R - b) from first and second moments.
Vec enumerated_variance(const PolicyVector& pi, const BanditTask& task, double b, const Vec& eta) {
  int k = task.num_actions();
  Vec out(k);
  for (int i = 0; i < k; ++i) {
    double m1 = 0.0, m2 = 0.0;
    for (int a = 0; a < k; ++a) {
      double c = (a == i ? 1.0 : 0.0) - eta[i];
      double er = task.rewards[a] - b;                          // E[R - b | a]
      double er2 = er * er + task.sigma(a) * task.sigma(a);     // E[(R - b)^2 | a]
      m1 += pi[a] * c * er;
      m2 += pi[a] * c * c * er2;
    }
    out[i] = m2 - m1 * m1;
  }
  return out;
}

}  // namespace

TEST_CASE("pull") {
  RngStream rng(1, 0);
  CHECK(pull(BanditTask(v3(0, 0, 1), 0.0), 2, rng) == 1.0);
  CHECK(pull(BanditTask(v3(1, 2, 3), 0.0), 0, rng) == 1.0);
  CHECK_THROWS_AS(pull(BanditTask(v3(1, 2, 3), 0.0), 3, rng), LookupError);
  BanditTask t(v3(0.5, -1, 2), 1.0);
  const int n = 100000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += pull(t, 1, rng);
  CHECK(std::abs(s / n + 1.0) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("expected gradient") {
  BanditTask t(v3(0, 0, 1), 1.0);
  Vec g = expected_gradient(PolicyVector(Vec::Constant(3, 1.0 / 3)), t).g;
  CHECK(g[0] == doctest::Approx(-1.0 / 9));
  CHECK(g[1] == doctest::Approx(-1.0 / 9));
  CHECK(g[2] == doctest::Approx(2.0 / 9));
  // saturated on a set of equal-reward actions
  BanditTask eq(v3(1, 1, 0), 1.0);
  CHECK(expected_gradient(PolicyVector(v3(0.3, 0.7, 0)), eq).g.cwiseAbs().maxCoeff() < 1e-16);
  RngStream rng(2, 0);
  for (int i = 0; i < 50; ++i) {
    BanditTask r(random_rewards(rng, 5), 1.0);
    CHECK(std::abs(expected_gradient(random_policy(rng, 5), r).g.sum()) < 1e-14);
  }
}

TEST_CASE("sampled estimators") {
  const double eps = 0.37;
  PolicyVector corner(v3(1, 0, 0));
  // the saturated three-armed example: A = a0, R = eps, b = r_pi = 0
  CHECK(regular_estimate(0, eps, corner, 0.0).g.cwiseAbs().maxCoeff() == 0.0);
  Vec alt = alternate_estimate(0, eps, 0.0, 3).g;
  CHECK(alt[0] == eps);
  CHECK(alt[1] == 0.0);
  CHECK(alt[2] == 0.0);

  RngStream rng(3, 0);
  for (int i = 0; i < 50; ++i) {
    PolicyVector pi = random_policy(rng, 4);
    int a = static_cast<int>(rng() % 4);
    double R = rng.normal(), b = rng.normal();
    CHECK(std::abs(regular_estimate(a, R, pi, b).g.sum()) < 1e-14);
    CHECK(regular_estimate(a, b, pi, b).g.cwiseAbs().maxCoeff() == 0.0);
    CHECK(alternate_estimate(a, b, b, 4).g.cwiseAbs().maxCoeff() == 0.0);
    CHECK((alternate_estimate(a, R, b, 4).g.array() != 0.0).count() == 1);
  }
}

TEST_CASE("unbiasedness by exact summation") {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + trial % 4;
    BanditTask task(random_rewards(rng, k), 1.0);
    PolicyVector pi = random_policy(rng, k);
    double b = rng.normal();
    double r_pi = pi.probs().dot(task.rewards);
    Vec reg = Vec::Zero(k), alt_true = Vec::Zero(k), alt_b = Vec::Zero(k);
    // Gaussian noise has zero mean and the estimators are linear in R
    for (int a = 0; a < k; ++a) {
      reg += pi[a] * regular_estimate(a, task.rewards[a], pi, b).g;
      alt_true += pi[a] * alternate_estimate(a, task.rewards[a], r_pi, k).g;
      alt_b += pi[a] * alternate_estimate(a, task.rewards[a], b, k).g;
    }
    Vec grad = expected_gradient(pi, task).g;
    CHECK((reg - grad).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((alt_true - grad).cwiseAbs().maxCoeff() < 1e-12);
    Vec biased = pi.probs().cwiseProduct((task.rewards.array() - b).matrix());
    CHECK((alt_b - biased).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("alternate estimator Monte-Carlo mean") {
  RngStream rng(5, 0);
  BanditTask task(v3(0.2, -0.5, 1.0), 1.0);
  PolicyVector pi(v3(0.5, 0.3, 0.2));
  double r_pi = pi.probs().dot(task.rewards);
  const int n = 1000000;
  Vec sum = Vec::Zero(3), sq = Vec::Zero(3);
  for (int i = 0; i < n; ++i) {
    int a = sample_categorical(pi, rng);
    Vec g = alternate_estimate(a, pull(task, a, rng), r_pi, 3).g;
    sum += g;
    sq += g.cwiseProduct(g);
  }
  Vec mean = sum / n;
  Vec se = ((sq / n - mean.cwiseProduct(mean)) / n).cwiseSqrt();
  Vec grad = expected_gradient(pi, task).g;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean[i] - grad[i]) < 4 * se[i]);
}

TEST_CASE("variance closed form") {
  // corner values
  for (int c = 0; c < 3; ++c) {
    Vec e = Vec::Zero(3);
    e[c] = 1.0;
    PolicyVector pi(e);
    BanditTask task(v3(0.3, -1.0, 2.0), v3(0.5, 1.5, 2.5));
    Vec reg = estimator_variance(pi, task, 0.7, pi.probs());
    Vec alt = estimator_variance(pi, task, 0.7, Vec::Zero(3));
    CHECK(reg.cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 3; ++i)
      CHECK(alt[i] == (i == c ? task.sigma(c) * task.sigma(c) : 0.0));
  }
  // six-term form against direct moment enumeration
  RngStream rng(6, 0);
  for (int trial = 0; trial < 200; ++trial) {
    int k = 2 + trial % 5;
    Vec sig(k);
    for (int i = 0; i < k; ++i) sig[i] = 2.0 * rng.uniform();
    BanditTask task(random_rewards(rng, k), sig);
    PolicyVector pi = random_policy(rng, k);
    double b = 2.0 * rng.normal();
    for (const Vec& eta : {pi.probs(), Vec(Vec::Zero(k))}) {
      Vec v = estimator_variance(pi, task, b, eta);
      Vec o = enumerated_variance(pi, task, b, eta);
      CHECK((v - o).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, o.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("variance against sampling") {
  RngStream rng(7, 0);
  BanditTask task(v3(0.0, 0.5, 1.0), 1.0);
  PolicyVector pi(v3(0.6, 0.25, 0.15));
  const double b = 0.3;
  const int n = 400000;
  for (int kind = 0; kind < 2; ++kind) {
    Vec eta = kind == 0 ? pi.probs() : Vec(Vec::Zero(3));
    Vec sum = Vec::Zero(3), sq = Vec::Zero(3);
    for (int i = 0; i < n; ++i) {
      int a = sample_categorical(pi, rng);
      double R = pull(task, a, rng);
      Vec g = -eta;
      g[a] += 1.0;
      g *= R - b;
      sum += g;
      sq += g.cwiseProduct(g);
    }
    Vec mean = sum / n;
    Vec var = sq / n - mean.cwiseProduct(mean);
    Vec v = estimator_variance(pi, task, b, eta);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(var[i] - v[i]) < 0.03 * v[i]);
  }
}

TEST_CASE("fixed points of the biased update") {
  BanditTask task(v3(1, 2, 3), 1.0);
  auto fp = biased_fixed_point(task, 4.0);
  auto* in = std::get_if<InteriorFixedPoint>(&fp);
  REQUIRE(in);
  CHECK(std::abs(in->pi[0] - 2.0 / 11) <= 1e-12);
  CHECK(std::abs(in->pi[1] - 3.0 / 11) <= 1e-12);
  CHECK(std::abs(in->pi[2] - 6.0 / 11) <= 1e-12);
  CHECK(std::abs(bandit_objective(in->pi, task) - 26.0 / 11) <= 1e-12);

  auto face = biased_fixed_point(task, 2.0);
  REQUIRE(std::holds_alternative<SimplexFace>(face));
  CHECK(std::get<SimplexFace>(face).actions == std::vector<int>{1});
  CHECK(std::holds_alternative<NoFixedPoint>(biased_fixed_point(task, 2.5)));
  CHECK(std::holds_alternative<SimplexFace>(biased_fixed_point(task, 2.0 + 1e-10)));
  CHECK(std::holds_alternative<InteriorFixedPoint>(biased_fixed_point(task, -4.0)));

  // kappa-constant condition at interior fixed points
  RngStream rng(8, 0);
  for (int i = 0; i < 50; ++i) {
    BanditTask t(random_rewards(rng, 4), 1.0);
    double b = t.rewards.maxCoeff() + 0.1 + rng.uniform();
    if (i % 2) b = t.rewards.minCoeff() - 0.1 - rng.uniform();
    auto p = std::get<InteriorFixedPoint>(biased_fixed_point(t, b)).pi;
    Vec kappa = p.probs().cwiseProduct((t.rewards.array() - b).matrix());
    CHECK(kappa.maxCoeff() - kappa.minCoeff() < 1e-12);
  }
}

TEST_CASE("biased update step") {
  BanditTask task(v3(1, 2, 3), 1.0);
  Vec th = v3(0.2, -0.4, 0.1);
  PolicyVector pi = softmax(th);
  double r_pi = bandit_objective(pi, task);
  Vec step = biased_update_step(th, task, r_pi, 0.3);
  CHECK((step - (th + 0.3 * expected_gradient(pi, task).g)).cwiseAbs().maxCoeff() < 1e-15);

  auto star = std::get<InteriorFixedPoint>(biased_fixed_point(task, 4.0)).pi;
  Vec th_star = star.probs().array().log().matrix();
  Vec next = biased_update_step(th_star, task, 4.0, 1.0);
  CHECK(kl_divergence(star, softmax(next)) < 1e-10);

  auto rep = std::get<InteriorFixedPoint>(biased_fixed_point(task, -4.0)).pi;
  RngStream rng(9, 0);
  for (int i = 0; i < 100; ++i) {
    Vec t0 = v3(rng.normal(), rng.normal(), rng.normal());
    double alpha = std::min(std::exp(2.0 * rng.normal()), 20.0);  // keeps softmax entries above underflow
    double before = kl_divergence(rep, softmax(t0));
    double after = kl_divergence(rep, softmax(biased_update_step(t0, task, -4.0, alpha)));
    CHECK(after > before);
  }
  CHECK_THROWS_AS(biased_update_step(th, task, 4.0, 0.0), DomainError);
}

TEST_CASE("attractor stepsize bound") {
  BanditTask task(v3(1, 2, 3), 1.0);
  PolicyVector pi(v3(0.2, 0.1, 0.7));
  CHECK_THROWS_AS(max_attractor_stepsize(pi, task, 3.0), DomainError);
  CHECK_THROWS_AS(max_attractor_stepsize(pi, task, -4.0), DomainError);
  double bound = max_attractor_stepsize(pi, task, 4.0);
  CHECK(bound > 0.0);
  // hand evaluation: pi(r - b) = [-0.6, -0.2, -0.7]; (sum 1/(r-b))^-1 = -6/11;
  // sum pi^2 (r - b) = -0.12 - 0.02 - 0.49 = -0.63
  CHECK(bound == doctest::Approx(8.0 / 0.25 * (-6.0 / 11 + 0.63)).epsilon(1e-12));

  BanditTask sym(v3(-1, 0, 1), 1.0);
  CHECK(max_attractor_stepsize(PolicyVector(Vec::Constant(3, 1.0 / 3)), sym, 2.0) > 0.0);

  RngStream rng(10, 0);
  for (int i = 0; i < 100; ++i) {
    BanditTask t(random_rewards(rng, 3), 1.0);
    double b = t.rewards.maxCoeff() + 0.05 + 2.0 * rng.uniform();
    Vec th = v3(rng.normal(), rng.normal(), rng.normal());
    PolicyVector p = softmax(th);
    auto star = std::get<InteriorFixedPoint>(biased_fixed_point(t, b)).pi;
    double alpha = max_attractor_stepsize(p, t, b) / 2;
    double before = kl_divergence(star, p);
    double after = kl_divergence(star, softmax(biased_update_step(th, t, b, alpha)));
    CHECK(after < before);
  }
}

TEST_CASE("inequality terms") {
  BanditTask task(v3(1, 2, 3), 1.0);
  PolicyVector pi(v3(0.2, 0.1, 0.7));
  InequalityTerms tiny = figure_b3_quantities(pi, task, 4.0, 1e-12);
  CHECK(std::abs(tiny.lhs_log_term) < 1e-10);
  CHECK(std::abs(tiny.lower_bound) < 1e-10);
  CHECK(std::abs(tiny.upper_bound) < 1e-10);
  CHECK(std::abs(tiny.rhs_inverse_sum) < 1e-10);

  RngStream rng(11, 0);
  for (int i = 0; i < 500; ++i) {
    BanditTask t(random_rewards(rng, 4), 1.0);
    Vec w(4);
    for (int j = 0; j < 4; ++j) w[j] = 0.02 + rng.uniform();
    PolicyVector p = PolicyVector::normalized(w);
    double alpha = std::exp(2.0 * rng.normal());
    double pess = t.rewards.minCoeff() - 0.1 - rng.uniform();
    double opt = t.rewards.maxCoeff() + 0.1 + rng.uniform();
    auto q = figure_b3_quantities(p, t, pess, alpha);
    auto q2 = figure_b3_quantities(p, t, opt, alpha);
    CHECK(q.lower_bound > q.rhs_inverse_sum);
    for (const auto& x : {q, q2}) {
      CHECK(x.lhs_log_term >= x.lower_bound - 1e-12 * std::abs(x.lower_bound));
      CHECK(x.lhs_log_term <= x.upper_bound + 1e-12 * std::abs(x.upper_bound));
    }
  }
}

TEST_CASE("baseline running average") {
  BaselineState s{0.0, 0.5, false};
  CHECK(update_baseline(s, 2.0).b == 1.0);
  CHECK(update_baseline(BaselineState{3.0, 1.0, false}, -7.0).b == -7.0);
  CHECK(update_baseline(BaselineState{3.0, 0.5, true}, -7.0).b == 3.0);

  RngStream rng(12, 0);
  const double beta = 0.05, mu = 1.5, sigma = 2.0;
  BaselineState st{0.0, beta, false};
  for (int i = 0; i < 2000; ++i) st = update_baseline(st, mu + sigma * rng.normal());
  int outside = 0;
  const double band = 3.0 * sigma * std::sqrt(beta / (2.0 - beta));
  for (int i = 0; i < 20000; ++i) {
    st = update_baseline(st, mu + sigma * rng.normal());
    outside += std::abs(st.b - mu) > band;
  }
  CHECK(outside < 20000 * 0.01);
}

TEST_CASE("biased expected update is not a gradient field") {
  RngStream rng(13, 0);
  for (int i = 0; i < 50; ++i) {
    BanditTask t(random_rewards(rng, 3), 1.0);
    double b = t.rewards.maxCoeff() + 0.5 + rng.uniform();
    Vec th = v3(rng.normal(), rng.normal(), rng.normal());
    auto field = [&](const Vec& x) {
      return Vec(softmax(x).probs().cwiseProduct((t.rewards.array() - b).matrix()));
    };
    Mat jac(3, 3);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Vec tp = th, tm = th;
      tp[c] += h;
      tm[c] -= h;
      jac.col(c) = (field(tp) - field(tm)) / (2 * h);
    }
    CHECK((jac - jac.transpose()).cwiseAbs().maxCoeff() > 1e-6);
  }
}

TEST_CASE("simplex field") {
  BanditTask task(v3(0, 0, 1), 1.0);
  FieldOptions opt;
  opt.resolution = 11;
  opt.alpha = 0.5;
  auto rows = simplex_field(task, opt);
  std::set<int> ids;
  for (const auto& r : rows) ids.insert(r.point_id);
  CHECK(ids.size() == 66u);  // 11 * 12 / 2
  CHECK(rows.size() == 66u * 7);

  for (const auto& r : rows) {
    // actions with zero probability are never sampled there
    if (r.pi[0] != 1.0 || r.sampled_action > 0) continue;
    CHECK(r.dtheta.cwiseAbs().maxCoeff() == 0.0);  // regular, b = r_pi, at the corner
    CHECK(r.var.cwiseAbs().maxCoeff() == 0.0);
  }

  opt.estimator = EstimatorKind::Alternate;
  for (const auto& r : simplex_field(task, opt)) {
    if (r.pi[0] != 1.0 || r.sampled_action != 0) continue;
    CHECK(std::abs(r.dtheta[0]) == doctest::Approx(opt.alpha * opt.noise));
    CHECK(r.dtheta[1] == 0.0);
    CHECK(r.dtheta[2] == 0.0);
    CHECK(r.dpi.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.var[0] == doctest::Approx(1.0));
  }

  std::ostringstream out;
  write_simplex_field_csv(out, rows);
  CHECK(out.str().rfind(
            "point_id,pi0,pi1,pi2,sampled_action,noise_sign,dpi0,dpi1,dpi2,var0,var1,var2\n", 0) == 0);

  Vec r4 = Vec::Zero(4);
  CHECK_THROWS_AS(simplex_field(BanditTask(r4, 1.0), opt), UnsupportedError);
}
