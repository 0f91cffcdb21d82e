#pragma once

#include <vector>

#include <Eigen/Dense>

namespace eki {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// One ensemble member per row.
using MemberMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Snapshot of J control vectors u^1..u^J in R^d.
///
/// Every statistic in this library is normalised by 1/J, not 1/(J-1).
/// A single-member ensemble is accepted but reported through degenerate():
/// all of its covariances vanish identically.
class Ensemble {
 public:
  explicit Ensemble(MemberMatrix members);

  static Ensemble from_members(const std::vector<Vector>& members);

  Index size() const { return members_.rows(); }
  Index dim() const { return members_.cols(); }
  bool degenerate() const { return size() < 2; }

  const MemberMatrix& members() const { return members_; }
  Vector member(Index j) const { return members_.row(j).transpose(); }

 private:
  MemberMatrix members_;
};

/// G(u^j) for every member of an ensemble, plus the image mean.
struct ForwardImages {
  explicit ForwardImages(MemberMatrix images);

  Index size() const { return images.rows(); }
  Index dim() const { return images.cols(); }

  MemberMatrix images;
  Vector mean;
};

/// Blocks of the covariance of the stacked vectors [u, G(u)].
struct AugmentedCovariance {
  Matrix C;    // d x d
  Matrix C_G;  // d x K
  Matrix D_G;  // K x K

  /// [[C, C_G], [C_G^T, D_G]]
  Matrix assembled() const;
};

struct Spread {
  Vector member_sq_norms;  // ||u^j - mean||^2
  double mean_square = 0.0;
};

struct PsdCheck {
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool ok = true;
};

Vector ensemble_mean(const Ensemble& e);

/// Rows u^j - mean.
MemberMatrix deviations(const Ensemble& e);
MemberMatrix deviations(const ForwardImages& g);

Matrix covariance_uu(const Ensemble& e);
Matrix covariance_uG(const Ensemble& e, const ForwardImages& g);
Matrix covariance_GG(const ForwardImages& g);
AugmentedCovariance augmented_covariance(const Ensemble& e, const ForwardImages& g);

Spread ensemble_spread(const Ensemble& e);
Vector ensemble_residual(const Ensemble& e, const Vector& u_star);

/// Largest distance of a current member from span{u^j(0)} (the mean of the
/// initial ensemble together with its deviations).
double subspace_residual(const Ensemble& current, const Ensemble& initial);

/// Symmetric PSD test with tolerance 1e-10 * (1 + ||m||_F). Violations are
/// reported, never clamped.
PsdCheck check_psd(const Matrix& m);

}  // namespace eki
