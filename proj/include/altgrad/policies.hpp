#pragma once

#include <iosfwd>
#include <memory>

#include "altgrad/bandit.hpp"
#include "altgrad/features.hpp"
#include "altgrad/numerics.hpp"

namespace altgrad {

// Policies whose weight gradients are rank one: d/dW = x(s) c^T for an action-space vector c.
// Agents work with the coefficient c and apply W += scale * x c^T.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int num_actions() const = 0;
  virtual int feature_dim() const = 0;
  virtual Vec preferences(const SparseFeatures& x) const = 0;
  virtual PolicyVector distribution(const SparseFeatures& x) const = 0;
  // Regular: gradient of log pi(a|s). Alternate: gradient of theta(s)_a.
  virtual Vec score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const = 0;
  virtual Vec entropy_coeff(const SparseFeatures& x) const = 0;
  virtual void add_outer(const SparseFeatures& x, const Vec& c, double scale) = 0;
  virtual const Mat& weights() const = 0;
  virtual void set_weights(const Mat& w) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

class LinearSoftmaxPolicy : public Policy {
 public:
  LinearSoftmaxPolicy(int feature_dim, int num_actions);
  explicit LinearSoftmaxPolicy(Mat w);

  int num_actions() const override { return static_cast<int>(w_.cols()); }
  int feature_dim() const override { return static_cast<int>(w_.rows()); }
  Vec preferences(const SparseFeatures& x) const override;
  PolicyVector distribution(const SparseFeatures& x) const override;
  Vec score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const override;
  Vec entropy_coeff(const SparseFeatures& x) const override;
  void add_outer(const SparseFeatures& x, const Vec& c, double scale) override;
  const Mat& weights() const override { return w_; }
  void set_weights(const Mat& w) override;
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<LinearSoftmaxPolicy>(*this);
  }

 private:
  Mat w_;
};

// Preference table indexed by state. Features must be one-hot; the hot index is the state.
class TabularSoftmaxPolicy : public Policy {
 public:
  TabularSoftmaxPolicy(int num_states, int num_actions);
  explicit TabularSoftmaxPolicy(Mat theta);

  PolicyVector distribution(int s) const;
  Vec row(int s) const { return theta_.row(s).transpose(); }
  void set_row(int s, const Vec& prefs) { theta_.row(s) = prefs.transpose(); }

  int num_actions() const override { return static_cast<int>(theta_.cols()); }
  int feature_dim() const override { return static_cast<int>(theta_.rows()); }
  Vec preferences(const SparseFeatures& x) const override;
  PolicyVector distribution(const SparseFeatures& x) const override;
  Vec score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const override;
  Vec entropy_coeff(const SparseFeatures& x) const override;
  void add_outer(const SparseFeatures& x, const Vec& c, double scale) override;
  const Mat& weights() const override { return theta_; }
  void set_weights(const Mat& w) override;
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<TabularSoftmaxPolicy>(*this);
  }

 private:
  int state_of(const SparseFeatures& x) const;
  Mat theta_;
};

// pi(a|s) proportional to |theta(s)_a|^p with theta(s) = W^T x(s).
class EscortPolicy : public Policy {
 public:
  EscortPolicy(int feature_dim, int num_actions, double p);
  EscortPolicy(Mat w, double p);

  // zero weights except the bias row, so theta(s) = 1 for every action and state
  void init_uniform(int bias_index, double bias_value);
  double power() const { return p_; }

  int num_actions() const override { return static_cast<int>(w_.cols()); }
  int feature_dim() const override { return static_cast<int>(w_.rows()); }
  Vec preferences(const SparseFeatures& x) const override;
  PolicyVector distribution(const SparseFeatures& x) const override;
  Vec score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const override;
  Vec entropy_coeff(const SparseFeatures& x) const override;
  void add_outer(const SparseFeatures& x, const Vec& c, double scale) override;
  const Mat& weights() const override { return w_; }
  void set_weights(const Mat& w) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<EscortPolicy>(*this); }

 private:
  Mat w_;
  double p_;
};

// Dense d x |A| gradient matrices.
Mat regular_logpi_grad(const Policy& policy, const SparseFeatures& x, int a);
Mat alternate_pref_grad(const Policy& policy, const SparseFeatures& x, int a);
Mat escort_logpi_grad(const EscortPolicy& policy, const SparseFeatures& x, int a);
Mat entropy_grad(const Policy& policy, const SparseFeatures& x);

// softmax entropy gradient coefficient: -(pi log pi + H pi)
Vec softmax_entropy_coeff(const PolicyVector& pi);

void write_weights_csv(std::ostream& out, const Mat& w);
Mat read_weights_csv(std::istream& in);

}  // namespace altgrad
