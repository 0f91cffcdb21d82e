#pragma once

#include <functional>
#include <optional>

#include "eki/ensemble.hpp"
#include "eki/forward_model.hpp"

namespace eki {

/// Covariance inflation C~ = C + (1 - alpha) Sigma, C~_G = C_G + (1 - alpha) Sigma_G,
/// and the relaxation weight beta.
///
/// alpha = 1, beta = 0 is the classical continuous-time EKI. Stability of the
/// moment system needs alpha < 1 and beta < 1; see in_stable_regime().
struct StabilizationParams {
  double alpha = 1.0;
  double beta = 0.0;
  Matrix sigma;    // d x d, symmetric
  Matrix sigma_G;  // d x K

  static StabilizationParams classical(Index d, Index k);

  /// Sigma_G = (G(Sigma))^T with G applied to the columns of Sigma through the
  /// tangent at u_ref; computed once, since Sigma is fixed for a run.
  static StabilizationParams with_inflation(const ForwardModel& model, double alpha, double beta, Matrix sigma,
                                            const Vector& u_ref);

  bool in_stable_regime() const { return alpha < 1.0 && beta < 1.0; }
  bool is_classical() const { return alpha == 1.0 && beta == 0.0; }

  void validate(Index d, Index k) const;
};

/// (G(Sigma))^T via the model tangent at u_ref; equals Sigma G^T for linear models.
Matrix sigma_image(const ForwardModel& model, const Matrix& sigma, const Vector& u_ref);

/// One Euler-sized step of the ensemble velocity, plus the forward images the
/// velocity was built from (absent for laws without a forward model).
struct Velocity {
  MemberMatrix rates;
  std::optional<ForwardImages> images;
};

using EvolutionLaw = std::function<Velocity(const Ensemble&)>;

/// u^j <- u^j + C_G (D_G + Gamma^{-1}/dt)^{-1} (y - G(u^j))
Ensemble discrete_update(const Ensemble& e, const InverseProblem& problem, double dt);

/// du^j/dt = C_G Gamma (y - G(u^j))
MemberMatrix continuous_rhs_classical(const Ensemble& e, const InverseProblem& problem);
MemberMatrix continuous_rhs_classical(const Ensemble& e, const ForwardImages& g, const InverseProblem& problem);

/// du^j/dt = C~_G Gamma (y - G(u^j)) + beta C~ (u^j - mean)
MemberMatrix continuous_rhs_stabilized(const Ensemble& e, const InverseProblem& problem,
                                       const StabilizationParams& params);
MemberMatrix continuous_rhs_stabilized(const Ensemble& e, const ForwardImages& g, const InverseProblem& problem,
                                       const StabilizationParams& params);

EvolutionLaw classical_law(InverseProblem problem);
EvolutionLaw stabilized_law(InverseProblem problem, StabilizationParams params);

}  // namespace eki
