#include "altgrad/sampling_tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace altgrad {

namespace {
double exp_clamped(double theta) {
  return std::exp(std::clamp(theta, -SamplingTree::kPrefClamp, SamplingTree::kPrefClamp));
}
}  // namespace

SamplingTree SamplingTree::build(const std::vector<int>& actions, const PreferenceVector& prefs,
                                 RngStream& rng) {
  return build(actions, prefs, [&rng](std::size_t) { return (rng() >> 63) != 0; });
}

SamplingTree SamplingTree::build(const std::vector<int>& actions, const PreferenceVector& prefs,
                                 const HeadChooser& choose_upper) {
  if (actions.empty()) throw DimensionError("sampling tree needs at least one action");
  if (static_cast<Eigen::Index>(actions.size()) != prefs.size())
    throw DimensionError("sampling tree: actions and preferences differ in length");
  SamplingTree t;
  int max_id = 0;
  for (int a : actions) {
    if (a < 0) throw DomainError("sampling tree: action ids must be non-negative");
    max_id = std::max(max_id, a);
  }
  t.index_.assign(static_cast<std::size_t>(max_id) + 1, kNil);
  for (int a : actions) {
    if (t.index_[a] != kNil) throw DomainError("sampling tree: duplicate action id");
    t.index_[a] = 0;
  }
  t.nodes_.reserve(actions.size());
  t.root_ = t.build_range(actions, prefs, 0, actions.size(), kNil, choose_upper);
  std::vector<double> aggs;
  t.subtree_sum(t.root_, &aggs);
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) t.nodes_[i].agg = aggs[i];
  return t;
}

int SamplingTree::build_range(const std::vector<int>& actions, const PreferenceVector& prefs,
                              std::size_t lo, std::size_t hi, int parent,
                              const HeadChooser& choose_upper) {
  if (lo >= hi) return kNil;
  std::size_t n = hi - lo;
  std::size_t m = (n - 1) / 2;
  if (n % 2 == 0 && choose_upper(n)) m = n / 2;
  std::size_t pos = lo + m;
  int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{actions[pos], exp_clamped(prefs[static_cast<Eigen::Index>(pos)]), 0.0,
                        parent});
  index_[actions[pos]] = idx;
  int l = build_range(actions, prefs, lo, pos, idx, choose_upper);
  int r = build_range(actions, prefs, pos + 1, hi, idx, choose_upper);
  nodes_[idx].left = l;
  nodes_[idx].right = r;
  return idx;
}

// returns left + val + right; writes each node's left-subtree sum into aggs
double SamplingTree::subtree_sum(int idx, std::vector<double>* aggs) const {
  if (aggs->size() != nodes_.size()) aggs->assign(nodes_.size(), 0.0);
  if (idx == kNil) return 0.0;
  const Node& z = nodes_[idx];
  double l = subtree_sum(z.left, aggs);
  double r = subtree_sum(z.right, aggs);
  (*aggs)[idx] = l;
  return l + z.val + r;
}

std::vector<double> SamplingTree::recomputed_aggs() const {
  std::vector<double> aggs(nodes_.size(), 0.0);
  subtree_sum(root_, &aggs);
  return aggs;
}

int SamplingTree::node_index(int action) const {
  if (action < 0 || action >= static_cast<int>(index_.size()) || index_[action] == kNil)
    throw LookupError("sampling tree: unknown action " + std::to_string(action));
  return index_[action];
}

const SamplingTree::Node& SamplingTree::node_of(int action) const {
  return nodes_[node_index(action)];
}

double SamplingTree::total_weight() const {
  double s = 0.0;
  for (int z = root_; z != kNil; z = nodes_[z].right) s += nodes_[z].agg + nodes_[z].val;
  return s;
}

int SamplingTree::depth() const {
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    int d = 0;
    for (int z = static_cast<int>(i); z != kNil; z = nodes_[z].parent) ++d;
    best = std::max(best, d);
  }
  return best;
}

std::vector<int> SamplingTree::inorder() const {
  std::vector<int> out;
  std::vector<int> stack;
  int z = root_;
  while (z != kNil || !stack.empty()) {
    while (z != kNil) {
      stack.push_back(z);
      z = nodes_[z].left;
    }
    z = stack.back();
    stack.pop_back();
    out.push_back(nodes_[z].act);
    z = nodes_[z].right;
  }
  return out;
}

int SamplingTree::select(double x) const {
  if (!(x >= 0.0) || !(x < total_weight())) throw DomainError("sampling tree: x out of range");
  int z = root_;
  while (true) {
    const Node& n = nodes_[z];
    if (x < n.agg && n.left != kNil) {
      z = n.left;
    } else if (x < n.agg + n.val || n.right == kNil) {
      return n.act;
    } else {
      x -= n.agg + n.val;
      z = n.right;
    }
  }
}

int SamplingTree::sample(RngStream& rng) {
  double x = rng.uniform() * total_weight();
  int visits = 0;
  int z = root_;
  while (true) {
    ++visits;
    const Node& n = nodes_[z];
    // the nil checks absorb rounding drift between cached aggs and x
    if (x < n.agg && n.left != kNil) {
      z = n.left;
    } else if (x < n.agg + n.val || n.right == kNil) {
      last_sample_visits_ = visits;
      return n.act;
    } else {
      x -= n.agg + n.val;
      z = n.right;
    }
  }
}

void SamplingTree::update_preference(int action, double theta) {
  int z = node_index(action);
  double new_val = exp_clamped(theta);
  double delta = new_val - nodes_[z].val;
  nodes_[z].val = new_val;
  int visits = 1;
  while (nodes_[z].parent != kNil) {
    int p = nodes_[z].parent;
    ++visits;
    if (nodes_[p].left == z) nodes_[p].agg += delta;
    z = p;
  }
  last_update_visits_ = visits;
}

LinearScanSampler::LinearScanSampler(const PreferenceVector& prefs)
    : vals_(prefs.size()), prefix_(prefs.size()) {
  if (prefs.size() == 0) throw DimensionError("linear sampler needs at least one action");
  for (Eigen::Index i = 0; i < prefs.size(); ++i) vals_[i] = exp_clamped(prefs[i]);
  update_preference(0, std::log(vals_[0]));
}

int LinearScanSampler::sample(RngStream& rng) const {
  double x = rng.uniform() * prefix_[prefix_.size() - 1];
  for (Eigen::Index i = 0; i < prefix_.size(); ++i)
    if (x < prefix_[i]) return static_cast<int>(i);
  return static_cast<int>(prefix_.size() - 1);
}

void LinearScanSampler::update_preference(int action, double theta) {
  if (action < 0 || action >= vals_.size()) throw LookupError("linear sampler: unknown action");
  vals_[action] = exp_clamped(theta);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < vals_.size(); ++i) prefix_[i] = (acc += vals_[i]);
}

}  // namespace altgrad
