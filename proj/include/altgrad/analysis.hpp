#pragma once

#include <vector>

#include "altgrad/bandit.hpp"
#include "altgrad/numerics.hpp"
#include "altgrad/policies.hpp"

namespace altgrad {

struct Transition {
  int next;  // -1 is the terminal state
  double prob;
};

struct TabularMdpModel {
  int num_states = 0;
  int num_actions = 0;
  double gamma = 1.0;
  Vec mu;  // start distribution
  std::vector<std::vector<std::vector<Transition>>> p;  // p[s][a]
  Mat reward;  // expected reward r(s, a)

  void validate() const;
};

// chain family with num_actions actions, the last of which moves right
TabularMdpModel chain_model(int num_actions = 2);

struct ExactValues {
  Vec v;
  Mat q;
};

ExactValues exact_values(const TabularMdpModel& m, const Mat& pi);  // pi(s, a)
Vec occupancy(const TabularMdpModel& m, const Mat& pi);
Mat exact_policy_gradient(const TabularMdpModel& m, const TabularSoftmaxPolicy& policy);
double exact_objective(const TabularMdpModel& m, const Mat& pi);

Mat policy_table(const TabularSoftmaxPolicy& policy);

}  // namespace altgrad
