#include "eki/forward_model.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace eki {

namespace {

void require_dim(const char* what, Index got, Index expected) {
  if (got != expected) {
    throw std::invalid_argument(std::string(what) + " has dimension " + std::to_string(got) +
                                ", expected " + std::to_string(expected));
  }
}

}  // namespace

Matrix ForwardModel::tangent(const Vector& u_ref, const Matrix& directions) const {
  require_dim("reference control", u_ref.size(), control_dim());
  require_dim("direction", directions.rows(), control_dim());
  Matrix out(observation_dim(), directions.cols());
  for (Index c = 0; c < directions.cols(); ++c) {
    const double norm = directions.col(c).norm();
    if (norm == 0.0) {
      out.col(c).setZero();
      continue;
    }
    const double h = 1e-6 * (1.0 + u_ref.norm()) / norm;
    out.col(c) = (apply(u_ref + h * directions.col(c)) - apply(u_ref - h * directions.col(c))) / (2.0 * h);
  }
  return out;
}

ForwardImages evaluate(const ForwardModel& model, const Ensemble& e) {
  require_dim("ensemble", e.dim(), model.control_dim());
  MemberMatrix images(e.size(), model.observation_dim());
  const auto members = static_cast<long>(e.size());
  // Exceptions must not leave the parallel region; the first one is rethrown.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < members; ++j) {
    try {
      images.row(j) = model.apply(e.member(j)).transpose();
    } catch (...) {
#pragma omp critical(eki_evaluate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ForwardImages(std::move(images));
}

LinearModel::LinearModel(Matrix g, Matrix gamma) : g_(std::move(g)), gamma_(std::move(gamma)) {
  require_dim("precision rows", gamma_.rows(), g_.rows());
  require_dim("precision cols", gamma_.cols(), g_.rows());
  if ((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("noise precision must be symmetric");
  }
  if (Eigen::LLT<Matrix>(gamma_).info() != Eigen::Success) {
    throw std::invalid_argument("noise precision must be positive definite");
  }
}

Vector LinearModel::apply(const Vector& u) const {
  require_dim("control", u.size(), control_dim());
  return g_ * u;
}

Matrix LinearModel::tangent(const Vector& u_ref, const Matrix& directions) const {
  require_dim("reference control", u_ref.size(), control_dim());
  require_dim("direction", directions.rows(), control_dim());
  return g_ * directions;
}

Vector LinearModel::least_squares_solution(const Vector& y) const {
  require_dim("data", y.size(), observation_dim());
  const Matrix normal = g_.transpose() * gamma_ * g_;
  return normal.ldlt().solve(g_.transpose() * (gamma_ * y));
}

Vector linear_apply(const LinearModel& model, const Vector& u) { return model.apply(u); }

double phi(const LinearModel& model, const Vector& u, const Vector& y) {
  require_dim("data", y.size(), model.observation_dim());
  const Vector r = y - model.apply(u);
  return 0.5 * r.dot(model.gamma() * r);
}

Vector grad_phi_linear(const LinearModel& model, const Vector& u, const Vector& y) {
  require_dim("data", y.size(), model.observation_dim());
  const Vector r = y - model.apply(u);
  return -model.g().transpose() * (model.gamma() * r);
}

void InverseProblem::validate() const {
  if (!model) {
    throw std::invalid_argument("inverse problem has no forward model");
  }
  require_dim("data", data.size(), model->observation_dim());
  require_dim("precision rows", precision.rows(), model->observation_dim());
  require_dim("precision cols", precision.cols(), model->observation_dim());
  if ((precision - precision.transpose()).norm() > 1e-12 * (1.0 + precision.norm())) {
    throw std::invalid_argument("noise precision must be symmetric");
  }
}

InverseProblem make_problem(std::shared_ptr<const LinearModel> model, Vector y) {
  InverseProblem p{model, model->gamma(), std::move(y)};
  p.validate();
  return p;
}

}  // namespace eki
