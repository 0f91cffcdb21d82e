#include "eki/dynamics.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace eki {

namespace {

void require_shape(const char* what, const Matrix& m, Index rows, Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

void require_consistent(const Ensemble& e, const ForwardImages& g, const InverseProblem& problem) {
  problem.validate();
  if (e.dim() != problem.control_dim()) {
    throw std::invalid_argument("ensemble dimension " + std::to_string(e.dim()) +
                                " does not match the forward model input " +
                                std::to_string(problem.control_dim()));
  }
  if (g.size() != e.size() || g.dim() != problem.observation_dim()) {
    throw std::invalid_argument("forward images do not match the ensemble and the model");
  }
}

/// Rows (Gamma (y - G(u^j)))^T.
MemberMatrix weighted_residuals(const ForwardImages& g, const InverseProblem& problem) {
  const MemberMatrix residuals = (-g.images).rowwise() + problem.data.transpose();
  return residuals * problem.precision;
}

}  // namespace

StabilizationParams StabilizationParams::classical(Index d, Index k) {
  return {1.0, 0.0, Matrix::Zero(d, d), Matrix::Zero(d, k)};
}

StabilizationParams StabilizationParams::with_inflation(const ForwardModel& model, double alpha, double beta,
                                                        Matrix sigma, const Vector& u_ref) {
  StabilizationParams params{alpha, beta, std::move(sigma), Matrix()};
  params.sigma_G = sigma_image(model, params.sigma, u_ref);
  params.validate(model.control_dim(), model.observation_dim());
  return params;
}

void StabilizationParams::validate(Index d, Index k) const {
  require_shape("Sigma", sigma, d, d);
  require_shape("Sigma_G", sigma_G, d, k);
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("inflation matrix Sigma must be symmetric");
  }
}

Matrix sigma_image(const ForwardModel& model, const Matrix& sigma, const Vector& u_ref) {
  require_shape("Sigma", sigma, model.control_dim(), model.control_dim());
  return model.tangent(u_ref, sigma).transpose();
}

Ensemble discrete_update(const Ensemble& e, const InverseProblem& problem, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("discrete update needs dt > 0");
  }
  const ForwardImages g = evaluate(*problem.model, e);
  require_consistent(e, g, problem);

  const Index k = problem.observation_dim();
  const AugmentedCovariance cov = augmented_covariance(e, g);
  const Matrix noise_cov = problem.precision.llt().solve(Matrix::Identity(k, k));
  const Matrix system = cov.D_G + noise_cov / dt;
  Eigen::LLT<Matrix> llt(0.5 * (system + system.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("D_G + Gamma^{-1}/dt is not positive definite");
  }
  const Matrix residuals = ((-g.images).rowwise() + problem.data.transpose()).transpose();
  const Matrix gains = llt.solve(residuals);  // K x J
  MemberMatrix updated = e.members() + (cov.C_G * gains).transpose();
  return Ensemble(std::move(updated));
}

MemberMatrix continuous_rhs_classical(const Ensemble& e, const InverseProblem& problem) {
  return continuous_rhs_classical(e, evaluate(*problem.model, e), problem);
}

MemberMatrix continuous_rhs_classical(const Ensemble& e, const ForwardImages& g, const InverseProblem& problem) {
  require_consistent(e, g, problem);
  const double inv_j = 1.0 / static_cast<double>(e.size());
  // C_G Gamma r_j for all j at once: W C_G^T = (W DG^T) D / J, with the J x J
  // product first.
  const MemberMatrix w = weighted_residuals(g, problem);
  const MemberMatrix mixing = w * deviations(g).transpose();
  return inv_j * (mixing * deviations(e));
}

MemberMatrix continuous_rhs_stabilized(const Ensemble& e, const InverseProblem& problem,
                                       const StabilizationParams& params) {
  return continuous_rhs_stabilized(e, evaluate(*problem.model, e), problem, params);
}

MemberMatrix continuous_rhs_stabilized(const Ensemble& e, const ForwardImages& g, const InverseProblem& problem,
                                       const StabilizationParams& params) {
  require_consistent(e, g, problem);
  params.validate(e.dim(), problem.observation_dim());

  const double inv_j = 1.0 / static_cast<double>(e.size());
  const double inflation = 1.0 - params.alpha;
  const MemberMatrix dev = deviations(e);
  const MemberMatrix w = weighted_residuals(g, problem);

  MemberMatrix rates = inv_j * ((w * deviations(g).transpose()) * dev);
  if (inflation != 0.0) {
    rates += inflation * (w * params.sigma_G.transpose());
  }
  if (params.beta != 0.0) {
    // beta C~ e^j with C~ symmetric: rows of dev C~.
    MemberMatrix relax = inv_j * ((dev * dev.transpose()) * dev);
    if (inflation != 0.0) relax += inflation * (dev * params.sigma);
    rates += params.beta * relax;
  }
  return rates;
}

EvolutionLaw classical_law(InverseProblem problem) {
  problem.validate();
  return [problem = std::move(problem)](const Ensemble& e) {
    ForwardImages g = evaluate(*problem.model, e);
    MemberMatrix rates = continuous_rhs_classical(e, g, problem);
    return Velocity{std::move(rates), std::move(g)};
  };
}

EvolutionLaw stabilized_law(InverseProblem problem, StabilizationParams params) {
  problem.validate();
  params.validate(problem.control_dim(), problem.observation_dim());
  return [problem = std::move(problem), params = std::move(params)](const Ensemble& e) {
    ForwardImages g = evaluate(*problem.model, e);
    MemberMatrix rates = continuous_rhs_stabilized(e, g, problem, params);
    return Velocity{std::move(rates), std::move(g)};
  };
}

}  // namespace eki
