#pragma once

#include <functional>
#include <vector>

#include "altgrad/numerics.hpp"

namespace altgrad {

// Balanced binary tree over e^theta. Inorder traversal follows the build order;
// each node caches the weight of its left subtree so sampling and single updates
// touch one root-to-leaf path.
class SamplingTree {
 public:
  static constexpr int kNil = -1;
  static constexpr double kPrefClamp = 700.0;

  struct Node {
    int act;
    double val;
    double agg;  // sum of val over the left subtree
    int parent = kNil;
    int left = kNil;
    int right = kNil;
  };

  // For even-length sublists: return true to take the upper middle index n/2,
  // false for the lower one n/2 - 1.
  using HeadChooser = std::function<bool(std::size_t n)>;

  static SamplingTree build(const std::vector<int>& actions, const PreferenceVector& prefs,
                            RngStream& rng);
  static SamplingTree build(const std::vector<int>& actions, const PreferenceVector& prefs,
                            const HeadChooser& choose_upper);

  int select(double x) const;
  int sample(RngStream& rng);
  void update_preference(int action, double theta);

  // nodes touched by the most recent sample() or update_preference()
  int last_sample_visits() const { return last_sample_visits_; }
  int last_update_visits() const { return last_update_visits_; }

  double total_weight() const;
  int depth() const;
  std::size_t size() const { return nodes_.size(); }
  int root() const { return root_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node_of(int action) const;
  std::vector<int> inorder() const;

  // recomputes every agg from scratch; used as a consistency oracle
  std::vector<double> recomputed_aggs() const;

 private:
  int build_range(const std::vector<int>& actions, const PreferenceVector& prefs, std::size_t lo,
                  std::size_t hi, int parent, const HeadChooser& choose_upper);
  double subtree_sum(int idx, std::vector<double>* aggs) const;
  int node_index(int action) const;

  std::vector<Node> nodes_;
  std::vector<int> index_;  // action id -> node slot
  int root_ = kNil;
  int last_sample_visits_ = 0;
  int last_update_visits_ = 0;
};

// O(n) reference sampler: prefix sums rebuilt after every update, linear scan to sample.
class LinearScanSampler {
 public:
  explicit LinearScanSampler(const PreferenceVector& prefs);
  int sample(RngStream& rng) const;
  void update_preference(int action, double theta);

 private:
  Vec vals_;
  Vec prefix_;
};

}  // namespace altgrad
