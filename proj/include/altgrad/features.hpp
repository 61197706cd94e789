#pragma once

#include <utility>
#include <vector>

#include "altgrad/numerics.hpp"

namespace altgrad {

struct SparseFeatures {
  int dim = 0;
  std::vector<int> index;
  std::vector<double> value;

  Vec dense() const;
  double dot(const Vec& w) const;
  double squared_norm() const;
};

SparseFeatures one_hot(int dim, int i);

class TileCoder {
 public:
  using Bounds = std::vector<std::pair<double, double>>;

  // offsets[t][d] is the shift of tiling t along dimension d, in state units
  TileCoder(Bounds bounds, int tiles_per_dim, int tilings, std::vector<std::vector<double>> offsets,
            bool include_bias = true, double normalizer = 0.0);

  SparseFeatures encode(const Vec& state) const;

  int dim() const { return dim_; }
  int num_active() const { return tilings_ + (include_bias_ ? 1 : 0); }
  int tiles_per_dim() const { return tiles_; }
  int tilings() const { return tilings_; }
  double normalizer() const { return normalizer_; }
  double tile_width(int d) const;
  bool has_bias() const { return include_bias_; }
  int bias_index() const { return dim_ - 1; }
  const std::vector<std::vector<double>>& offsets() const { return offsets_; }

 private:
  Bounds bounds_;
  int tiles_;
  int tilings_;
  std::vector<std::vector<double>> offsets_;
  bool include_bias_;
  double normalizer_;
  int per_tiling_;
  int dim_;
};

// offsets uniform in [0, tile width) per dimension per tiling; normalizer 0 means tilings + bias
TileCoder make_coder(const TileCoder::Bounds& bounds, int tiles_per_dim, int tilings,
                     RngStream& rng, bool include_bias = true, double normalizer = 0.0);

}  // namespace altgrad
