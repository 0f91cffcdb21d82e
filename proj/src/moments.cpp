#include "eki/moments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "eki/run_record.hpp"

namespace eki::moments {

namespace {

std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue iteration did not converge");
  }
  std::vector<std::complex<double>> values(solver.eigenvalues().begin(), solver.eigenvalues().end());
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return values;
}

}  // namespace

MomentRate1D classical_moment_rhs_1d(const MomentState1D& s, const ScalarModel& model) {
  const double c = s.variance();
  const double weight = model.g * model.gamma;
  return {c * weight * (model.y - model.g * s.m), 2.0 * c * weight * (model.y * s.m - model.g * s.E)};
}

MomentRate1D stabilized_moment_rhs_1d(const MomentState1D& s, const ScalarModel& model,
                                      const Inflation1D& inflation) {
  const double c = s.variance();
  const double sigma = inflation.sigma.value_or(s.m * s.m);
  const double c_inflated = c + (1.0 - inflation.alpha) * sigma;
  const double weight = model.g * model.gamma;
  return {c_inflated * weight * (model.y - model.g * s.m),
          2.0 * c_inflated * (weight * (model.y * s.m - model.g * s.E) + inflation.beta * c)};
}

double classical_variance_analytic(double c0, double t) {
  if (c0 < 0.0 || t < 0.0) {
    throw std::invalid_argument("closed-form variance needs C0 >= 0 and t >= 0");
  }
  return c0 / (1.0 + 2.0 * c0 * t);
}

MomentLaw1D classical_moment_law(ScalarModel model) {
  return [model](const MomentState1D& s) { return classical_moment_rhs_1d(s, model); };
}

MomentLaw1D stabilized_moment_law(ScalarModel model, Inflation1D inflation) {
  return [model, inflation](const MomentState1D& s) { return stabilized_moment_rhs_1d(s, model, inflation); };
}

namespace {

long step_count(double dt, double t_max, int stride) {
  if (!(dt > 0.0) || !(t_max > 0.0) || stride < 1) {
    throw std::invalid_argument("moment integration needs dt > 0, t_max > 0 and stride >= 1");
  }
  return static_cast<long>(std::floor(t_max / dt + 1e-9));
}

void check_finite(double a, double b, long n, double dt) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("moment trajectory became non-finite at t=" + format_double(static_cast<double>(n + 1) * dt));
  }
}

}  // namespace

std::vector<MomentSample> integrate_moments(const MomentLaw1D& law, MomentState1D initial, double dt, double t_max,
                                            int stride) {
  const long total = step_count(dt, t_max, stride);
  std::vector<MomentSample> samples;
  samples.reserve(static_cast<std::size_t>(total / stride + 2));
  MomentState1D s = initial;
  for (long n = 0;; ++n) {
    if (n % stride == 0 || n == total) samples.push_back({static_cast<double>(n) * dt, s});
    if (n == total) break;
    const MomentRate1D rate = law(s);
    s.m += dt * rate.dm;
    s.E += dt * rate.dE;
    check_finite(s.m, s.E, n, dt);
  }
  return samples;
}

VarianceRate1D variance_form_rhs_1d(const VarianceState1D& s, const ScalarModel& model, const Inflation1D& inflation) {
  const double sigma = inflation.sigma.value_or(s.m * s.m);
  const double c_inflated = s.C + (1.0 - inflation.alpha) * sigma;
  return {c_inflated * model.g * model.gamma * (model.y - model.g * s.m),
          -2.0 * c_inflated * s.C * (model.g * model.g * model.gamma - inflation.beta)};
}

std::vector<VarianceSample> integrate_variance_form(const ScalarModel& model, const Inflation1D& inflation,
                                                    VarianceState1D initial, double dt, double t_max, int stride) {
  const long total = step_count(dt, t_max, stride);
  std::vector<VarianceSample> samples;
  samples.reserve(static_cast<std::size_t>(total / stride + 2));
  VarianceState1D s = initial;
  for (long n = 0;; ++n) {
    if (n % stride == 0 || n == total) samples.push_back({static_cast<double>(n) * dt, s});
    if (n == total) break;
    const VarianceRate1D rate = variance_form_rhs_1d(s, model, inflation);
    s.m += dt * rate.dm;
    s.C += dt * rate.dC;
    check_finite(s.m, s.C, n, dt);
  }
  return samples;
}

MomentRateND moment_rhs_nd(const MomentStateND& s, const Vector& y, double alpha, const Matrix& sigma) {
  const Index d = s.m.size();
  if (y.size() != d || s.C.rows() != d || s.C.cols() != d || sigma.rows() != d || sigma.cols() != d) {
    throw std::invalid_argument("moment state, target and Sigma must share one dimension");
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("inflation matrix Sigma must be symmetric");
  }
  const double inflation = 1.0 - alpha;
  const Vector gap = y - s.m;
  MomentRateND rate;
  rate.dm = s.C * gap + inflation * (sigma * gap);
  const Matrix dc = -2.0 * s.C * s.C - inflation * (sigma * s.C + s.C * sigma);
  rate.dC = 0.5 * (dc + dc.transpose());
  return rate;
}

Vector flatten(const MomentStateND& s) {
  const Index d = s.m.size();
  Vector x(d + d * d);
  x.head(d) = s.m;
  x.tail(d * d) = s.C.reshaped();
  return x;
}

MomentStateND unflatten(const Vector& x, Index d) {
  if (x.size() != d + d * d) {
    throw std::invalid_argument("flat moment state has the wrong length");
  }
  return {x.head(d), x.tail(d * d).reshaped(d, d)};
}

std::vector<Equilibrium1D> EquilibriumSet::sample(const std::vector<double>& ks) const {
  std::vector<Equilibrium1D> out;
  for (double k : ks) {
    const std::string name = family.alpha == 1.0 ? "F_k" : "F_k_alpha";
    out.push_back({name + "(k=" + format_double(k) + ")", family.at(k), family.admissible(k)});
  }
  return out;
}

EquilibriumSet equilibria_1d(const ScalarModel& model, double alpha) {
  if (model.g != 1.0 || model.gamma != 1.0) {
    throw std::invalid_argument("equilibrium enumeration is available for G = Gamma = 1 only");
  }
  return {{"F_y", {model.y, model.y * model.y}, true}, {alpha}};
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::HyperbolicStable:
      return "hyperbolic-stable";
    case Classification::HyperbolicUnstable:
      return "hyperbolic-unstable";
    case Classification::NonHyperbolic:
      return "non-hyperbolic";
  }
  return "unknown";
}

StateMap as_state_map(const MomentLaw1D& law) {
  return [law](const Vector& x) {
    const MomentRate1D r = law({x[0], x[1]});
    return Vector{{r.dm, r.dE}};
  };
}

StateMap nd_state_map(Vector y, double alpha, Matrix sigma) {
  return [y = std::move(y), alpha, sigma = std::move(sigma)](const Vector& x) {
    const Index d = y.size();
    const MomentRateND r = moment_rhs_nd(unflatten(x, d), y, alpha, sigma);
    return flatten({r.dm, r.dC});
  };
}

Matrix finite_difference_jacobian(const StateMap& rhs, const Vector& x) {
  const double h = 1e-6 * (1.0 + x.norm());
  const Vector f0 = rhs(x);
  Matrix jac(f0.size(), x.size());
  const auto at = [&](Index c, double offset) {
    Vector shifted = x;
    shifted[c] += offset;
    Vector f = rhs(shifted);
    if (!f.allFinite()) {
      throw std::runtime_error("right-hand side is not finite near the linearisation point");
    }
    return f;
  };
  for (Index c = 0; c < x.size(); ++c) {
    // Fourth-order stencil: exact for the cubic moment right-hand sides.
    jac.col(c) = (at(c, -2.0 * h) - 8.0 * at(c, -h) + 8.0 * at(c, h) - at(c, 2.0 * h)) / (12.0 * h);
  }
  return jac;
}

EquilibriumReport jacobian_at(const Vector& state, const StateMap& rhs) {
  EquilibriumReport report;
  report.location = state;
  report.jacobian = finite_difference_jacobian(rhs, state);
  report.eigenvalues = sorted_eigenvalues(report.jacobian);
  report.tolerance = 1e-7 * (1.0 + report.jacobian.norm());

  bool on_axis = false;
  bool unstable = false;
  for (const auto& lambda : report.eigenvalues) {
    if (std::abs(lambda) < report.tolerance) ++report.zero_count;
    if (std::abs(lambda.real()) < report.tolerance) on_axis = true;
    if (lambda.real() > 0.0) unstable = true;
  }
  report.classification = on_axis    ? Classification::NonHyperbolic
                           : unstable ? Classification::HyperbolicUnstable
                                      : Classification::HyperbolicStable;
  return report;
}

void write_report(std::ostream& out, const std::string& label, const EquilibriumReport& report,
                  std::optional<bool> admissible) {
  out << "equilibrium " << label << '\n';
  out << "location";
  for (double v : report.location) out << ' ' << format_double(v);
  out << '\n';
  if (admissible) out << "admissible " << (*admissible ? "true" : "false") << '\n';
  for (const auto& lambda : report.eigenvalues) {
    out << "eigenvalue " << format_double(lambda.real()) << ' ' << format_double(lambda.imag()) << '\n';
  }
  out << "zero_count " << report.zero_count << '\n';
  out << "classification " << to_string(report.classification) << '\n';
  out << "end\n";
}

RankDeficiencyReport rank_deficiency_check(const Vector& y, const Matrix& sigma, double alpha) {
  if (!(alpha < 1.0)) {
    throw std::invalid_argument("rank analysis assumes alpha < 1");
  }
  const Index d = y.size();
  if (sigma.rows() != d || sigma.cols() != d) {
    throw std::invalid_argument("Sigma must be d x d");
  }
  RankDeficiencyReport report;
  const Matrix linear_m = -(1.0 - alpha) * sigma;
  report.dm_eigenvalues = sorted_eigenvalues(linear_m);
  const double tol = 1e-7 * (1.0 + linear_m.norm());
  report.hyperbolic = true;
  for (const auto& lambda : report.dm_eigenvalues) {
    if (std::abs(lambda) < tol) ++report.zero_count_dm;
    if (!(lambda.real() < -tol)) report.hyperbolic = false;
  }

  const Matrix full = finite_difference_jacobian(nd_state_map(y, alpha, sigma), flatten({y, Matrix::Zero(d, d)}));
  report.dC_eigenvalues = sorted_eigenvalues(full.bottomRightCorner(d * d, d * d));
  return report;
}

double VectorField::m_spacing() const {
  return m_resolution > 1 ? (window.m_max - window.m_min) / (m_resolution - 1) : 0.0;
}

double VectorField::E_spacing() const {
  return E_resolution > 1 ? (window.E_max - window.E_min) / (E_resolution - 1) : 0.0;
}

VectorField vector_field_sample(const MomentLaw1D& law, const PhaseWindow& window, int m_resolution,
                                int E_resolution) {
  if (m_resolution < 2 || E_resolution < 2 || !(window.m_max > window.m_min) || !(window.E_max > window.E_min)) {
    throw std::invalid_argument("phase window needs positive extent and at least 2 samples per axis");
  }
  VectorField field;
  field.window = window;
  field.m_resolution = m_resolution;
  field.E_resolution = E_resolution;
  field.points.resize(static_cast<std::size_t>(m_resolution) * static_cast<std::size_t>(E_resolution));
  const double dm_grid = field.m_spacing();
  const double dE_grid = field.E_spacing();

  const int total = m_resolution * E_resolution;
#pragma omp parallel for
  for (int idx = 0; idx < total; ++idx) {
    const int i = idx % m_resolution;
    const int j = idx / m_resolution;
    FieldPoint p;
    p.m = window.m_min + i * dm_grid;
    p.E = window.E_min + j * dE_grid;
    const MomentRate1D r = law({p.m, p.E});
    p.dm = r.dm;
    p.dE = r.dE;
    p.feasible = p.E >= p.m * p.m;
    field.points[static_cast<std::size_t>(idx)] = p;
  }

  auto component = [](const FieldPoint& p, int c) { return c == 0 ? p.dm : p.dE; };
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < E_resolution; ++j) {
      for (int i = 0; i < m_resolution; ++i) {
        const FieldPoint& p = field.at(i, j);
        const double v = component(p, c);
        if (v == 0.0) {
          field.markers.push_back({p.m, p.E, c});
          continue;
        }
        for (const auto& [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
          if (i + di >= m_resolution || j + dj >= E_resolution) continue;
          const FieldPoint& q = field.at(i + di, j + dj);
          const double w = component(q, c);
          if (w != 0.0 && (v < 0.0) != (w < 0.0)) {
            const double s = v / (v - w);
            field.markers.push_back({p.m + s * (q.m - p.m), p.E + s * (q.E - p.E), c});
          }
        }
      }
    }
  }
  return field;
}

void write_vector_field_csv(std::ostream& out, const VectorField& field) {
  out << "m,E,dm,dE,feasible_flag\n";
  for (const FieldPoint& p : field.points) {
    out << format_double(p.m) << ',' << format_double(p.E) << ',' << format_double(p.dm) << ','
        << format_double(p.dE) << ',' << (p.feasible ? 1 : 0) << '\n';
  }
}

void write_nullclines_csv(std::ostream& out, const VectorField& field) {
  out << "m,E,component\n";
  for (const NullclineMarker& mk : field.markers) {
    out << format_double(mk.m) << ',' << format_double(mk.E) << ',' << (mk.component == 0 ? "dm" : "dE") << '\n';
  }
}

}  // namespace eki::moments
