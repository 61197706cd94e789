#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "altgrad/sampling_tree.hpp"

using namespace altgrad;

namespace {

std::vector<int> iota_ids(int n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// prefix-sum answer over the inorder sequence
int linear_select(const std::vector<int>& order, const std::vector<double>& vals, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    acc += vals[i];
    if (x < acc) return order[i];
  }
  return order.back();
}

std::vector<double> inorder_vals(const SamplingTree& t) {
  std::vector<double> v;
  for (int a : t.inorder()) v.push_back(t.node_of(a).val);
  return v;
}

int ceil_log2(int n) {
  int d = 0;
  while ((1 << d) < n) ++d;
  return d;
}

}  // namespace

TEST_CASE("single action tree") {
  RngStream rng(1, 0);
  SamplingTree t = SamplingTree::build({0}, Vec::Zero(1), rng);
  CHECK(t.size() == 1);
  CHECK(t.node_of(0).val == 1.0);
  CHECK(t.node_of(0).agg == 0.0);
  CHECK(t.sample(rng) == 0);
  CHECK(t.last_sample_visits() == 1);
  CHECK_THROWS_AS(SamplingTree::build({}, Vec(), rng), DimensionError);
  CHECK_THROWS_AS(t.update_preference(5, 0.0), LookupError);
}

TEST_CASE("four-action example tree") {
  // list a3, a0, a2, a1 with exponentiated preferences 0.4, 0.1, 0.3, 0.2
  std::vector<int> acts = {3, 0, 2, 1};
  Vec th(4);
  th << std::log(0.4), std::log(0.1), std::log(0.3), std::log(0.2);
  // top level takes the upper middle (a2); the {a3, a0} sublist takes the lower one (a3)
  auto chooser = [](std::size_t n) { return n == 4; };
  SamplingTree t = SamplingTree::build(acts, th, chooser);

  const auto& nodes = t.nodes();
  const auto& root = nodes[t.root()];
  CHECK(root.act == 2);
  CHECK(nodes[root.left].act == 3);
  CHECK(nodes[root.right].act == 1);
  CHECK(nodes[nodes[root.left].right].act == 0);
  CHECK(nodes[root.left].left == SamplingTree::kNil);
  CHECK(root.agg == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.node_of(3).agg == 0.0);
  CHECK(t.node_of(0).agg == 0.0);
  CHECK(t.node_of(1).agg == 0.0);
  CHECK(t.inorder() == acts);
  CHECK(t.total_weight() == doctest::Approx(1.0).epsilon(1e-15));

  // raise a0 from 0.1 to 0.5: a0 sits in the root's left subtree but is a right child of a3
  t.update_preference(0, std::log(0.5));
  CHECK(t.node_of(2).agg == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(t.node_of(3).agg == 0.0);
  auto oracle = t.recomputed_aggs();
  for (std::size_t i = 0; i < nodes.size(); ++i)
    CHECK(t.nodes()[i].agg == doctest::Approx(oracle[i]).epsilon(1e-15));

  // same value again leaves weights unchanged
  double before = t.total_weight();
  t.update_preference(0, std::log(0.5));
  CHECK(t.total_weight() == before);
}

TEST_CASE("select follows cumulative buckets") {
  RngStream rng(2, 0);
  Vec th(2);
  th << 0.0, std::log(3.0);
  SamplingTree t = SamplingTree::build({0, 1}, th, rng);
  CHECK(t.select(0.5) == 0);
  CHECK(t.select(2.0) == 1);
  CHECK(t.select(0.0) == t.inorder().front());
  CHECK(t.select(1.0) == 1);  // boundary belongs to the right bucket
  CHECK_THROWS_AS(t.select(-0.1), DomainError);
  CHECK_THROWS_AS(t.select(4.0), DomainError);
}

TEST_CASE("depth and visit bounds") {
  RngStream rng(3, 0);
  SamplingTree t1023 = SamplingTree::build(iota_ids(1023), Vec::Zero(1023), rng);
  CHECK(t1023.depth() == 10);

  for (int d = 4; d <= 16; ++d) {
    int n = 1 << d;
    Vec th(n);
    for (int i = 0; i < n; ++i) th[i] = rng.normal();
    SamplingTree t = SamplingTree::build(iota_ids(n), th, rng);
    int bound = ceil_log2(n) + 1;
    CHECK(t.depth() <= bound);
    int max_s = 0, max_u = 0;
    for (int i = 0; i < 2000; ++i) {
      t.sample(rng);
      max_s = std::max(max_s, t.last_sample_visits());
      t.update_preference(static_cast<int>(rng() % n), rng.normal());
      max_u = std::max(max_u, t.last_update_visits());
    }
    CHECK(max_s <= d + 1);
    CHECK(max_u <= bound);
  }
}

TEST_CASE("updates keep select equal to a prefix-sum scan") {
  RngStream rng(4, 0);
  for (int n : {1, 2, 3, 7, 16, 33}) {
    Vec th(n);
    for (int i = 0; i < n; ++i) th[i] = rng.normal();
    std::vector<int> ids = iota_ids(n);
    // shuffled ids check that the inorder order is the build order, not id order
    for (int i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng() % (i + 1)]);
    SamplingTree t = SamplingTree::build(ids, th, rng);
    CHECK(t.inorder() == ids);
    auto shape = t.nodes();
    for (int u = 0; u < 500; ++u) t.update_preference(ids[rng() % n], 2.0 * rng.normal());
    for (std::size_t i = 0; i < shape.size(); ++i) {
      CHECK(t.nodes()[i].left == shape[i].left);
      CHECK(t.nodes()[i].right == shape[i].right);
      CHECK(t.nodes()[i].parent == shape[i].parent);
    }
    auto oracle = t.recomputed_aggs();
    for (std::size_t i = 0; i < oracle.size(); ++i)
      CHECK(std::abs(t.nodes()[i].agg - oracle[i]) <= 1e-9 * std::max(1.0, oracle[i]));
    auto vals = inorder_vals(t);
    double total = std::accumulate(vals.begin(), vals.end(), 0.0);
    CHECK(std::abs(t.total_weight() - total) <= 1e-9 * total);
    const int grid = 10000;
    int mismatches = 0;
    for (int g = 0; g < grid; ++g) {
      double x = total * (g + 0.5) / grid;
      if (x >= t.total_weight()) continue;
      if (t.select(x) != linear_select(ids, vals, x)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("sample frequencies") {
  RngStream rng(5, 0);
  Vec th(2);
  th << 0.0, std::log(3.0);
  SamplingTree t = SamplingTree::build({0, 1}, th, rng);
  const int n = 100000;
  int second = 0;
  for (int i = 0; i < n; ++i) second += t.sample(rng) == 1;
  CHECK(std::abs(second - 0.75 * n) < 4 * std::sqrt(n * 0.75 * 0.25));
}

TEST_CASE("chi-square goodness of fit for small trees") {
  RngStream rng(6, 0);
  for (int k : {2, 5, 8}) {
    Vec th(k);
    for (int i = 0; i < k; ++i) th[i] = rng.normal();
    SamplingTree t = SamplingTree::build(iota_ids(k), th, rng);
    const int n = 1000000;
    std::vector<double> count(k, 0.0);
    for (int i = 0; i < n; ++i) ++count[t.sample(rng)];
    PolicyVector pi = softmax(th);
    double stat = 0.0;
    for (int a = 0; a < k; ++a) stat += std::pow(count[a] - n * pi[a], 2) / (n * pi[a]);
    boost::math::chi_squared_distribution<double> chi(k - 1);
    double p = boost::math::cdf(boost::math::complement(chi, stat));
    CHECK(p > 0.001);
  }
}

TEST_CASE("linear scan baseline samples the same distribution") {
  RngStream rng(7, 0);
  Vec th(3);
  th << 0.0, 1.0, -1.0;
  LinearScanSampler lin(th);
  lin.update_preference(2, 1.0);
  th[2] = 1.0;
  PolicyVector pi = softmax(th);
  const int n = 200000;
  std::vector<int> c(3, 0);
  for (int i = 0; i < n; ++i) ++c[lin.sample(rng)];
  for (int a = 0; a < 3; ++a) CHECK(std::abs(c[a] - n * pi[a]) < 4 * std::sqrt(n * pi[a]));
}
