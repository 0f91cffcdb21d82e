#include "eki/prior.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace eki {

PriorSampler::PriorSampler(const SquareGrid& grid, double scale, std::uint64_t seed)
    : laplacian_(grid.negative_laplacian()), scale_(scale), seed_(seed) {
  if (scale < 0.0) {
    throw std::invalid_argument("prior scale must be non-negative");
  }
}

Ensemble PriorSampler::sample(Index count) const {
  if (count < 1) {
    throw std::invalid_argument("prior sample needs at least one member");
  }
  const Index d = laplacian_.rows();
  const Matrix xi = standard_normal_matrix(d, count, seed_);
  Eigen::SimplicialLLT<SparseMatrix> llt(laplacian_);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("discrete Laplacian is not positive definite");
  }
  const Matrix u = std::sqrt(scale_) * llt.solve(xi);
  return Ensemble(MemberMatrix(u.transpose()));
}

Matrix PriorSampler::covariance() const {
  const Matrix lap = Matrix(laplacian_);
  const Matrix inv = lap.llt().solve(Matrix::Identity(lap.rows(), lap.cols()));
  return scale_ * inv * inv;
}

Noise make_noise(double gamma, Index k, std::uint64_t seed) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("noise level gamma must be positive");
  }
  Noise noise;
  noise.eta = gamma * standard_normal_matrix(k, 1, seed).col(0);
  noise.norm_sq = noise.eta.squaredNorm();
  return noise;
}

Matrix standard_normal_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  // Column-major fill keeps each column a contiguous stretch of the stream.
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      m(r, c) = normal(rng);
    }
  }
  return m;
}

}  // namespace eki
