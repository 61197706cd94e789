#include "altgrad/numerics.hpp"

#include <cmath>
#include <numbers>

namespace altgrad {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kZeroProb = 1e-300;
}  // namespace

PolicyVector::PolicyVector(Vec probs) : p_(std::move(probs)) {
  if (p_.size() == 0) throw DimensionError("policy vector is empty");
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!(p_[i] >= 0.0)) throw DomainError("policy vector has a negative or NaN entry");
  }
  if (std::abs(p_.sum() - 1.0) > 1e-9) throw DomainError("policy vector does not sum to 1");
}

PolicyVector PolicyVector::normalized(Vec weights) {
  double s = weights.sum();
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("cannot normalize weights");
  weights /= s;
  return PolicyVector(std::move(weights));
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + kGolden + (a << 6) + (a >> 2)));
}

std::uint64_t hash_string(const std::string& s) {
  // FNV-1a, then mixed
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(hash_combine(mix64(seed), stream)) {}

RngStream::result_type RngStream::operator()() {
  return mix64(key_ + (++counter_) * kGolden);
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  // 1 - u1 is in (0, 1]
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::split(std::uint64_t purpose) const {
  return RngStream(hash_combine(seed_, stream_), purpose);
}

PolicyVector softmax(const PreferenceVector& prefs) {
  if (prefs.size() == 0) throw DimensionError("softmax of an empty vector");
  if (!prefs.allFinite()) throw DomainError("softmax of non-finite preferences");
  Vec e = (prefs.array() - prefs.maxCoeff()).exp();
  return PolicyVector(e / e.sum());
}

Vec log_softmax(const PreferenceVector& prefs) {
  if (prefs.size() == 0) throw DimensionError("log_softmax of an empty vector");
  if (!prefs.allFinite()) throw DomainError("log_softmax of non-finite preferences");
  double m = prefs.maxCoeff();
  double lse = m + std::log((prefs.array() - m).exp().sum());
  return (prefs.array() - lse).matrix();
}

double kl_divergence_to_softmax(const PolicyVector& p, const PreferenceVector& prefs) {
  if (p.size() != prefs.size()) throw DimensionError("kl_divergence_to_softmax: size mismatch");
  Vec lq = log_softmax(prefs);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > kZeroProb) kl += p[i] * (std::log(p[i]) - lq[i]);
  return kl;
}

Mat softmax_jacobian(const PolicyVector& pi) {
  const Vec& p = pi.probs();
  Mat j = -p * p.transpose();
  j.diagonal() += p;
  return j;
}

double kl_divergence(const PolicyVector& p, const PolicyVector& q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= kZeroProb) continue;
    if (q[i] <= kZeroProb) throw DomainError("kl_divergence: p not absolutely continuous w.r.t. q");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl < 0.0 ? 0.0 : kl;
}

double entropy(const PolicyVector& pi) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] > 0.0) h -= pi[i] * std::log(pi[i]);
  }
  return h < 0.0 ? 0.0 : h;
}

int sample_categorical(const PolicyVector& pi, RngStream& rng) {
  double x = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] <= 0.0) continue;
    acc += pi[i];
    last = static_cast<int>(i);
    if (x < acc) return last;
  }
  return last;
}

double sample_gaussian(double mean, double stddev, RngStream& rng) {
  if (stddev < 0.0) throw DomainError("sample_gaussian: negative std");
  if (stddev == 0.0) return mean;
  return mean + stddev * rng.normal();
}

}  // namespace altgrad
