#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "altgrad/errors.hpp"

namespace altgrad {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Action preferences theta. Plain Eigen vector; finiteness is checked where it matters.
using PreferenceVector = Vec;

// A point on the probability simplex. Construction validates the invariant.
class PolicyVector {
 public:
  static constexpr double kSumTol = 1e-12;

  PolicyVector() = default;
  explicit PolicyVector(Vec probs);

  // Renormalizes instead of validating; for values known to be a distribution up to rounding.
  static PolicyVector normalized(Vec weights);

  const Vec& probs() const { return p_; }
  double operator[](Eigen::Index i) const { return p_[i]; }
  Eigen::Index size() const { return p_.size(); }

 private:
  Vec p_;
};

// Counter-based generator: draw i of stream (seed, stream) is mix(key + i * golden).
// Satisfies UniformRandomBitGenerator so std distributions accept it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream);

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  // uniform in [0, 1) with 53 random bits
  double uniform();
  double normal();

  // independent child stream; does not advance this one
  RngStream split(std::uint64_t purpose) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_string(const std::string& s);

PolicyVector softmax(const PreferenceVector& prefs);
Mat softmax_jacobian(const PolicyVector& pi);
double kl_divergence(const PolicyVector& p, const PolicyVector& q);
// log of softmax(prefs), finite even where softmax underflows to zero
Vec log_softmax(const PreferenceVector& prefs);
// KL(p || softmax(prefs)) computed in log space
double kl_divergence_to_softmax(const PolicyVector& p, const PreferenceVector& prefs);
double entropy(const PolicyVector& pi);
int sample_categorical(const PolicyVector& pi, RngStream& rng);
double sample_gaussian(double mean, double stddev, RngStream& rng);

}  // namespace altgrad
