#include "altgrad/features.hpp"

#include <algorithm>
#include <cmath>

namespace altgrad {

Vec SparseFeatures::dense() const {
  Vec x = Vec::Zero(dim);
  for (std::size_t k = 0; k < index.size(); ++k) x[index[k]] += value[k];
  return x;
}

double SparseFeatures::dot(const Vec& w) const {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) s += w[index[k]] * value[k];
  return s;
}

double SparseFeatures::squared_norm() const {
  double s = 0.0;
  for (double v : value) s += v * v;
  return s;
}

SparseFeatures one_hot(int dim, int i) {
  if (i < 0 || i >= dim) throw LookupError("one_hot: index out of range");
  return SparseFeatures{dim, {i}, {1.0}};
}

TileCoder::TileCoder(Bounds bounds, int tiles_per_dim, int tilings,
                     std::vector<std::vector<double>> offsets, bool include_bias, double normalizer)
    : bounds_(std::move(bounds)),
      tiles_(tiles_per_dim),
      tilings_(tilings),
      offsets_(std::move(offsets)),
      include_bias_(include_bias),
      normalizer_(normalizer > 0.0 ? normalizer : tilings + (include_bias ? 1.0 : 0.0)) {
  if (bounds_.empty()) throw DimensionError("tile coder needs at least one dimension");
  if (tilings_ < 1 || tiles_ < 1) throw DomainError("tile coder needs tilings >= 1 and tiles >= 1");
  if (static_cast<int>(offsets_.size()) != tilings_) throw DimensionError("one offset row per tiling");
  for (const auto& row : offsets_)
    if (row.size() != bounds_.size()) throw DimensionError("offset row length must match dimensions");
  for (const auto& [lo, hi] : bounds_)
    if (!(hi > lo)) throw DomainError("tile coder bounds must have high > low");
  per_tiling_ = 1;
  for (std::size_t d = 0; d < bounds_.size(); ++d) per_tiling_ *= tiles_;
  dim_ = tilings_ * per_tiling_ + (include_bias_ ? 1 : 0);
}

double TileCoder::tile_width(int d) const {
  return (bounds_[d].second - bounds_[d].first) / tiles_;
}

SparseFeatures TileCoder::encode(const Vec& state) const {
  if (state.size() != static_cast<Eigen::Index>(bounds_.size()))
    throw DimensionError("tile coder: state dimension mismatch");
  SparseFeatures f;
  f.dim = dim_;
  f.index.reserve(num_active());
  const double v = 1.0 / normalizer_;
  for (int t = 0; t < tilings_; ++t) {
    int flat = 0;
    for (std::size_t d = 0; d < bounds_.size(); ++d) {
      auto [lo, hi] = bounds_[d];
      double x = std::clamp(state[static_cast<Eigen::Index>(d)], lo, hi);
      int cell = static_cast<int>(std::floor((x - lo + offsets_[t][d]) / tile_width(int(d))));
      flat = flat * tiles_ + std::clamp(cell, 0, tiles_ - 1);
    }
    f.index.push_back(t * per_tiling_ + flat);
  }
  if (include_bias_) f.index.push_back(dim_ - 1);
  f.value.assign(f.index.size(), v);
  return f;
}

TileCoder make_coder(const TileCoder::Bounds& bounds, int tiles_per_dim, int tilings,
                     RngStream& rng, bool include_bias, double normalizer) {
  if (tilings < 1) throw DomainError("make_coder: tilings must be >= 1");
  std::vector<std::vector<double>> offsets(tilings, std::vector<double>(bounds.size()));
  for (auto& row : offsets)
    for (std::size_t d = 0; d < bounds.size(); ++d)
      row[d] = rng.uniform() * (bounds[d].second - bounds[d].first) / tiles_per_dim;
  return TileCoder(bounds, tiles_per_dim, tilings, std::move(offsets), include_bias, normalizer);
}

}  // namespace altgrad
