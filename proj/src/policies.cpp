#include "altgrad/policies.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace altgrad {

namespace {

Vec softmax_score(const PolicyVector& pi, int a, EstimatorKind kind) {
  if (a < 0 || a >= pi.size()) throw LookupError("score: invalid action");
  Vec c;
  if (kind == EstimatorKind::Alternate) {
    c = Vec::Zero(pi.size());
  } else if (kind == EstimatorKind::Regular) {
    c = -pi.probs();
  } else {
    throw UnsupportedError("score: the expected estimator has no per-sample score");
  }
  c[a] += 1.0;
  return c;
}

void check_features(const SparseFeatures& x, Eigen::Index dim) {
  if (x.dim != dim) throw DimensionError("feature dimension does not match the policy");
}

Vec linear_prefs(const Mat& w, const SparseFeatures& x) {
  Vec th = Vec::Zero(w.cols());
  for (std::size_t k = 0; k < x.index.size(); ++k)
    th += x.value[k] * w.row(x.index[k]).transpose();
  return th;
}

void linear_add_outer(Mat& w, const SparseFeatures& x, const Vec& c, double scale) {
  for (std::size_t k = 0; k < x.index.size(); ++k)
    w.row(x.index[k]) += (scale * x.value[k]) * c.transpose();
}

}  // namespace

Vec softmax_entropy_coeff(const PolicyVector& pi) {
  const Vec& p = pi.probs();
  double h = entropy(pi);
  Vec c(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    c[i] = -(p[i] > 0.0 ? p[i] * std::log(p[i]) : 0.0) - h * p[i];
  return c;
}

LinearSoftmaxPolicy::LinearSoftmaxPolicy(int feature_dim, int num_actions)
    : w_(Mat::Zero(feature_dim, num_actions)) {
  if (feature_dim < 1 || num_actions < 1) throw DimensionError("policy needs features and actions");
}

LinearSoftmaxPolicy::LinearSoftmaxPolicy(Mat w) : w_(std::move(w)) {
  if (w_.size() == 0) throw DimensionError("policy needs features and actions");
}

void LinearSoftmaxPolicy::set_weights(const Mat& w) {
  if (w.rows() != w_.rows() || w.cols() != w_.cols()) throw DimensionError("weight shape mismatch");
  w_ = w;
}

Vec LinearSoftmaxPolicy::preferences(const SparseFeatures& x) const {
  check_features(x, w_.rows());
  return linear_prefs(w_, x);
}

PolicyVector LinearSoftmaxPolicy::distribution(const SparseFeatures& x) const {
  return softmax(preferences(x));
}

Vec LinearSoftmaxPolicy::score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const {
  check_features(x, w_.rows());
  if (kind == EstimatorKind::Alternate) {
    if (a < 0 || a >= w_.cols()) throw LookupError("score: invalid action");
    Vec c = Vec::Zero(w_.cols());
    c[a] = 1.0;
    return c;
  }
  return softmax_score(distribution(x), a, kind);
}

Vec LinearSoftmaxPolicy::entropy_coeff(const SparseFeatures& x) const {
  return softmax_entropy_coeff(distribution(x));
}

void LinearSoftmaxPolicy::add_outer(const SparseFeatures& x, const Vec& c, double scale) {
  check_features(x, w_.rows());
  linear_add_outer(w_, x, c, scale);
}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int num_states, int num_actions)
    : theta_(Mat::Zero(num_states, num_actions)) {
  if (num_states < 1 || num_actions < 1) throw DimensionError("policy needs states and actions");
}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(Mat theta) : theta_(std::move(theta)) {
  if (theta_.size() == 0) throw DimensionError("policy needs states and actions");
}

void TabularSoftmaxPolicy::set_weights(const Mat& w) {
  if (w.rows() != theta_.rows() || w.cols() != theta_.cols())
    throw DimensionError("weight shape mismatch");
  theta_ = w;
}

int TabularSoftmaxPolicy::state_of(const SparseFeatures& x) const {
  check_features(x, theta_.rows());
  if (x.index.size() != 1 || x.value[0] != 1.0)
    throw DomainError("tabular policy expects one-hot features");
  return x.index[0];
}

PolicyVector TabularSoftmaxPolicy::distribution(int s) const { return softmax(row(s)); }

Vec TabularSoftmaxPolicy::preferences(const SparseFeatures& x) const { return row(state_of(x)); }

PolicyVector TabularSoftmaxPolicy::distribution(const SparseFeatures& x) const {
  return distribution(state_of(x));
}

Vec TabularSoftmaxPolicy::score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const {
  int s = state_of(x);
  if (kind == EstimatorKind::Alternate) {
    if (a < 0 || a >= theta_.cols()) throw LookupError("score: invalid action");
    Vec c = Vec::Zero(theta_.cols());
    c[a] = 1.0;
    return c;
  }
  return softmax_score(distribution(s), a, kind);
}

Vec TabularSoftmaxPolicy::entropy_coeff(const SparseFeatures& x) const {
  return softmax_entropy_coeff(distribution(state_of(x)));
}

void TabularSoftmaxPolicy::add_outer(const SparseFeatures& x, const Vec& c, double scale) {
  theta_.row(state_of(x)) += scale * c.transpose();
}

EscortPolicy::EscortPolicy(int feature_dim, int num_actions, double p)
    : w_(Mat::Zero(feature_dim, num_actions)), p_(p) {
  if (feature_dim < 1 || num_actions < 1) throw DimensionError("policy needs features and actions");
  if (!(p >= 1.0)) throw DomainError("escort power must be >= 1");
}

EscortPolicy::EscortPolicy(Mat w, double p) : w_(std::move(w)), p_(p) {
  if (w_.size() == 0) throw DimensionError("policy needs features and actions");
  if (!(p >= 1.0)) throw DomainError("escort power must be >= 1");
}

void EscortPolicy::set_weights(const Mat& w) {
  if (w.rows() != w_.rows() || w.cols() != w_.cols()) throw DimensionError("weight shape mismatch");
  w_ = w;
}

void EscortPolicy::init_uniform(int bias_index, double bias_value) {
  if (bias_index < 0 || bias_index >= w_.rows()) throw LookupError("escort: bad bias index");
  w_.setZero();
  w_.row(bias_index).setConstant(1.0 / bias_value);
}

Vec EscortPolicy::preferences(const SparseFeatures& x) const {
  check_features(x, w_.rows());
  return linear_prefs(w_, x);
}

PolicyVector EscortPolicy::distribution(const SparseFeatures& x) const {
  Vec m = preferences(x).cwiseAbs().array().pow(p_).matrix();
  double z = m.sum();
  if (!(z > 0.0)) throw DomainError("escort policy: all preferences are zero");
  return PolicyVector(m / z);
}

Vec EscortPolicy::score_coeff(const SparseFeatures& x, int a, EstimatorKind kind) const {
  if (kind != EstimatorKind::Regular)
    throw UnsupportedError("escort policy only supports the regular estimator");
  Vec th = preferences(x);
  if (a < 0 || a >= th.size()) throw LookupError("score: invalid action");
  if (th[a] == 0.0) throw DomainError("escort gradient is singular at a zero preference");
  Eigen::ArrayXd abs_th = th.cwiseAbs().array();
  double z = abs_th.pow(p_).sum();
  Eigen::ArrayXd sgn = th.array().sign();
  Vec c = -(sgn * abs_th.pow(p_ - 1.0) / z).matrix();
  c[a] += 1.0 / th[a];
  return p_ * c;
}

Vec EscortPolicy::entropy_coeff(const SparseFeatures&) const {
  throw UnsupportedError("entropy gradient is implemented for softmax policies only");
}

void EscortPolicy::add_outer(const SparseFeatures& x, const Vec& c, double scale) {
  check_features(x, w_.rows());
  linear_add_outer(w_, x, c, scale);
}

Mat regular_logpi_grad(const Policy& policy, const SparseFeatures& x, int a) {
  return x.dense() * policy.score_coeff(x, a, EstimatorKind::Regular).transpose();
}

Mat alternate_pref_grad(const Policy& policy, const SparseFeatures& x, int a) {
  return x.dense() * policy.score_coeff(x, a, EstimatorKind::Alternate).transpose();
}

Mat escort_logpi_grad(const EscortPolicy& policy, const SparseFeatures& x, int a) {
  return x.dense() * policy.score_coeff(x, a, EstimatorKind::Regular).transpose();
}

Mat entropy_grad(const Policy& policy, const SparseFeatures& x) {
  return x.dense() * policy.entropy_coeff(x).transpose();
}

void write_weights_csv(std::ostream& out, const Mat& w) {
  out << "feature,action,weight\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) out << i << ',' << j << ',' << w(i, j) << '\n';
}

Mat read_weights_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "feature,action,weight")
    throw ConfigError("weights csv: missing header");
  std::vector<std::tuple<long, long, double>> cells;
  long rows = 0, cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    long i, j;
    double v;
    char c1, c2;
    if (!(ss >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',')
      throw ConfigError("weights csv: malformed line '" + line + "'");
    cells.emplace_back(i, j, v);
    rows = std::max(rows, i + 1);
    cols = std::max(cols, j + 1);
  }
  Mat w = Mat::Zero(rows, cols);
  for (auto [i, j, v] : cells) w(i, j) = v;
  return w;
}

}  // namespace altgrad
