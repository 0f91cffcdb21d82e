#include "eki/ensemble.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace eki {

namespace {

void require_same_size(const Ensemble& e, const ForwardImages& g) {
  if (e.size() != g.size()) {
    throw std::invalid_argument("ensemble has " + std::to_string(e.size()) + " members but " +
                                std::to_string(g.size()) + " forward images were given");
  }
}

Vector row_mean(const MemberMatrix& rows) {
  return rows.colwise().sum().transpose() / static_cast<double>(rows.rows());
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Ensemble::Ensemble(MemberMatrix members) : members_(std::move(members)) {
  if (members_.rows() < 1 || members_.cols() < 1) {
    throw std::invalid_argument("ensemble needs at least one member of positive dimension");
  }
}

Ensemble Ensemble::from_members(const std::vector<Vector>& members) {
  if (members.empty()) {
    throw std::invalid_argument("ensemble needs at least one member");
  }
  MemberMatrix rows(static_cast<Index>(members.size()), members.front().size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].size() != rows.cols()) {
      throw std::invalid_argument("ensemble members must share one dimension");
    }
    rows.row(static_cast<Index>(j)) = members[j].transpose();
  }
  return Ensemble(std::move(rows));
}

ForwardImages::ForwardImages(MemberMatrix rows) : images(std::move(rows)), mean(row_mean(images)) {}

Matrix AugmentedCovariance::assembled() const {
  const Index d = C.rows();
  const Index k = D_G.rows();
  Matrix full(d + k, d + k);
  full.topLeftCorner(d, d) = C;
  full.topRightCorner(d, k) = C_G;
  full.bottomLeftCorner(k, d) = C_G.transpose();
  full.bottomRightCorner(k, k) = D_G;
  return full;
}

Vector ensemble_mean(const Ensemble& e) { return row_mean(e.members()); }

MemberMatrix deviations(const Ensemble& e) {
  return e.members().rowwise() - ensemble_mean(e).transpose();
}

MemberMatrix deviations(const ForwardImages& g) {
  return g.images.rowwise() - g.mean.transpose();
}

Matrix covariance_uu(const Ensemble& e) {
  const MemberMatrix dev = deviations(e);
  return symmetrized(dev.transpose() * dev / static_cast<double>(e.size()));
}

Matrix covariance_uG(const Ensemble& e, const ForwardImages& g) {
  require_same_size(e, g);
  return deviations(e).transpose() * deviations(g) / static_cast<double>(e.size());
}

Matrix covariance_GG(const ForwardImages& g) {
  const MemberMatrix dev = deviations(g);
  return symmetrized(dev.transpose() * dev / static_cast<double>(g.size()));
}

AugmentedCovariance augmented_covariance(const Ensemble& e, const ForwardImages& g) {
  require_same_size(e, g);
  return {covariance_uu(e), covariance_uG(e, g), covariance_GG(g)};
}

Spread ensemble_spread(const Ensemble& e) {
  Spread s;
  s.member_sq_norms = deviations(e).rowwise().squaredNorm();
  s.mean_square = s.member_sq_norms.mean();
  return s;
}

Vector ensemble_residual(const Ensemble& e, const Vector& u_star) {
  if (u_star.size() != e.dim()) {
    throw std::invalid_argument("reference point has dimension " + std::to_string(u_star.size()) +
                                ", ensemble dimension is " + std::to_string(e.dim()));
  }
  return (e.members().rowwise() - u_star.transpose()).rowwise().squaredNorm();
}

double subspace_residual(const Ensemble& current, const Ensemble& initial) {
  if (current.dim() != initial.dim()) {
    throw std::invalid_argument("ensembles live in different control spaces");
  }
  const Index d = initial.dim();
  Matrix spanning(d, initial.size() + 1);
  spanning.col(0) = ensemble_mean(initial);
  spanning.rightCols(initial.size()) = deviations(initial).transpose();

  Eigen::ColPivHouseholderQR<Matrix> qr(spanning);
  // Pivots below 1e-12 of the largest one are treated as rank deficiency.
  qr.setThreshold(1e-12);
  const Index rank = qr.rank();
  if (rank == 0) {
    return current.members().rowwise().norm().maxCoeff();
  }
  const Matrix q = Matrix(qr.householderQ()).leftCols(rank);

  const Matrix u = current.members().transpose();
  const Matrix orthogonal = u - q * (q.transpose() * u);
  return orthogonal.colwise().norm().maxCoeff();
}

PsdCheck check_psd(const Matrix& m) {
  PsdCheck check;
  check.tolerance = 1e-10 * (1.0 + m.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m), Eigen::EigenvaluesOnly);
  check.min_eigenvalue = solver.eigenvalues().minCoeff();
  check.ok = check.min_eigenvalue >= -check.tolerance;
  return check;
}

}  // namespace eki
