#pragma once

#include <memory>

#include "eki/ensemble.hpp"

namespace eki {

/// Map G from control space R^d to observation space R^K.
///
/// apply() must be safe to call concurrently from several threads.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Index control_dim() const = 0;
  virtual Index observation_dim() const = 0;
  virtual Vector apply(const Vector& u) const = 0;

  /// Directional derivatives DG(u_ref) v, one column per column v of
  /// `directions`. The default uses central differences.
  virtual Matrix tangent(const Vector& u_ref, const Matrix& directions) const;
};

/// G(u^j) for every member, evaluated in parallel over members.
ForwardImages evaluate(const ForwardModel& model, const Ensemble& e);

/// G(u) = G u with noise precision Gamma (noise covariance Gamma^{-1}).
class LinearModel final : public ForwardModel {
 public:
  LinearModel(Matrix g, Matrix gamma);

  Index control_dim() const override { return g_.cols(); }
  Index observation_dim() const override { return g_.rows(); }
  Vector apply(const Vector& u) const override;
  Matrix tangent(const Vector& u_ref, const Matrix& directions) const override;

  const Matrix& g() const { return g_; }
  const Matrix& gamma() const { return gamma_; }

  /// Unique minimiser of phi when G^T Gamma G is invertible.
  Vector least_squares_solution(const Vector& y) const;

 private:
  Matrix g_;
  Matrix gamma_;
};

Vector linear_apply(const LinearModel& model, const Vector& u);

/// 1/2 ||Gamma^{1/2} (y - G u)||^2
double phi(const LinearModel& model, const Vector& u, const Vector& y);

/// -G^T Gamma (y - G u)
Vector grad_phi_linear(const LinearModel& model, const Vector& u, const Vector& y);

/// The data y, the noise precision Gamma and the model that explains y.
struct InverseProblem {
  std::shared_ptr<const ForwardModel> model;
  Matrix precision;
  Vector data;

  Index control_dim() const { return model->control_dim(); }
  Index observation_dim() const { return model->observation_dim(); }

  /// Throws std::invalid_argument on inconsistent shapes or an asymmetric
  /// precision.
  void validate() const;
};

InverseProblem make_problem(std::shared_ptr<const LinearModel> model, Vector y);

}  // namespace eki
