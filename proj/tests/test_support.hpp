#pragma once

#include <cstdint>
#include <random>

#include "eki/ensemble.hpp"

namespace eki::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  return random_matrix(n, 1, seed, scale).col(0);
}

inline Ensemble random_ensemble(Index j, Index d, std::uint64_t seed, double scale = 1.0) {
  return Ensemble(MemberMatrix(random_matrix(j, d, seed, scale)));
}

/// Symmetric positive definite matrix with eigenvalues at least `floor`.
inline Matrix random_spd(Index n, std::uint64_t seed, double floor = 0.5) {
  const Matrix a = random_matrix(n, n, seed);
  return a * a.transpose() + floor * Matrix::Identity(n, n);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace eki::testing
