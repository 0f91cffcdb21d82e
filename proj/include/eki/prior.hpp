#pragma once

#include <cstdint>

#include "eki/ensemble.hpp"
#include "eki/groundwater.hpp"

namespace eki {

/// Gaussian prior with covariance scale * L^{-2}, L the SPD discrete negative
/// Laplacian of a grid. Members are sqrt(scale) * L^{-1} xi with xi ~ N(0, I).
class PriorSampler {
 public:
  PriorSampler(const SquareGrid& grid, double scale, std::uint64_t seed);

  Ensemble sample(Index count) const;

  /// scale * L^{-2}, dense. Only sensible on small grids.
  Matrix covariance() const;

  double scale() const { return scale_; }
  std::uint64_t seed() const { return seed_; }
  const SparseMatrix& laplacian() const { return laplacian_; }

 private:
  SparseMatrix laplacian_;
  double scale_;
  std::uint64_t seed_;
};

struct Noise {
  Vector eta;
  double norm_sq = 0.0;  // ||eta||^2, the discrepancy threshold
};

/// eta with i.i.d. N(0, gamma^2) entries.
Noise make_noise(double gamma, Index k, std::uint64_t seed);

/// d x d matrix of i.i.d. standard normal entries.
Matrix standard_normal_matrix(Index rows, Index cols, std::uint64_t seed);

}  // namespace eki
