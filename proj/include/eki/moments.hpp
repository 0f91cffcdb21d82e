#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eki/ensemble.hpp"

namespace eki::moments {

/// First and second moment of a one-dimensional ensemble density.
struct MomentState1D {
  double m = 0.0;
  double E = 0.0;

  double variance() const { return E - m * m; }
  bool admissible(double tol = 0.0) const { return variance() >= -tol; }
};

struct MomentRate1D {
  double dm = 0.0;
  double dE = 0.0;
};

/// Scalar linear model G with precision Gamma and datum y.
struct ScalarModel {
  double g = 1.0;
  double gamma = 1.0;
  double y = 0.0;
};

/// Inflation C~ = C + (1 - alpha) sigma; sigma defaults to m^2, which makes
/// C~ = E - alpha m^2.
struct Inflation1D {
  double alpha = 1.0;
  double beta = 0.0;
  std::optional<double> sigma;
};

/// m' = C G Gamma (y - G m), E' = 2 C G Gamma (y m - G E), C = E - m^2.
MomentRate1D classical_moment_rhs_1d(const MomentState1D& s, const ScalarModel& model);

/// m' = C~ G Gamma (y - G m), E' = 2 C~ (G Gamma (y m - G E) + beta C).
MomentRate1D stabilized_moment_rhs_1d(const MomentState1D& s, const ScalarModel& model, const Inflation1D& inflation);

/// C(t) = C0 / (1 + 2 C0 t), the classical variance for G = Gamma = 1.
double classical_variance_analytic(double c0, double t);

using MomentLaw1D = std::function<MomentRate1D(const MomentState1D&)>;

MomentLaw1D classical_moment_law(ScalarModel model);
MomentLaw1D stabilized_moment_law(ScalarModel model, Inflation1D inflation);

struct MomentSample {
  double t = 0.0;
  MomentState1D state;
};

/// Explicit Euler on (m, E); samples every `stride` steps and at the end.
/// Throws std::domain_error once the state becomes non-finite.
std::vector<MomentSample> integrate_moments(const MomentLaw1D& law, MomentState1D initial, double dt, double t_max,
                                            int stride = 1);

/// The same 1D system written in (m, C). C' = E' - 2 m m' simplifies to
/// C' = -2 C~ C (G^2 Gamma - beta), so no E - m^2 cancellation enters and
/// variances far below the resolution of E stay representable. The
/// classical law is alpha = 1, beta = 0.
struct VarianceState1D {
  double m = 0.0;
  double C = 0.0;

  double second_moment() const { return C + m * m; }
};

struct VarianceRate1D {
  double dm = 0.0;
  double dC = 0.0;
};

struct VarianceSample {
  double t = 0.0;
  VarianceState1D state;
};

VarianceRate1D variance_form_rhs_1d(const VarianceState1D& s, const ScalarModel& model, const Inflation1D& inflation);

/// Explicit Euler on (m, C), sampled like integrate_moments.
std::vector<VarianceSample> integrate_variance_form(const ScalarModel& model, const Inflation1D& inflation,
                                                    VarianceState1D initial, double dt, double t_max, int stride = 1);

// Multi-dimensional system in the G = Gamma = I regime -----------------------

struct MomentStateND {
  Vector m;
  Matrix C;
};

struct MomentRateND {
  Vector dm;
  Matrix dC;
};

/// m' = C (y - m) + (1 - alpha) Sigma (y - m)
/// C' = -2 C C - (1 - alpha) (Sigma C + C Sigma)
/// dC is returned exactly symmetric.
MomentRateND moment_rhs_nd(const MomentStateND& s, const Vector& y, double alpha, const Matrix& sigma);

/// (m, vec(C)) with C stored column-major.
Vector flatten(const MomentStateND& s);
MomentStateND unflatten(const Vector& x, Index d);

// Equilibria and their linearisation ----------------------------------------

struct Equilibrium1D {
  std::string label;
  MomentState1D location;
  bool admissible = true;
};

/// F_{k,alpha} = (k, alpha k^2); alpha = 1 is the classical family F_k = (k, k^2).
struct EquilibriumFamily {
  double alpha = 1.0;

  MomentState1D at(double k) const { return {k, alpha * k * k}; }
  /// Inadmissible whenever alpha k^2 < k^2, i.e. alpha < 1 and k != 0.
  bool admissible(double k) const { return at(k).admissible(); }
};

struct EquilibriumSet {
  Equilibrium1D target;  // F_y = (y, y^2)
  EquilibriumFamily family;

  std::vector<Equilibrium1D> sample(const std::vector<double>& ks) const;
};

/// Equilibria of the 1D moment systems for G = Gamma = 1; alpha = 1 gives the
/// classical set. Throws std::invalid_argument outside that regime.
EquilibriumSet equilibria_1d(const ScalarModel& model, double alpha);

enum class Classification { HyperbolicStable, HyperbolicUnstable, NonHyperbolic };

std::string to_string(Classification c);

using StateMap = std::function<Vector(const Vector&)>;

StateMap as_state_map(const MomentLaw1D& law);
StateMap nd_state_map(Vector y, double alpha, Matrix sigma);

/// Fourth-order central differences with h = 1e-6 (1 + ||x||).
Matrix finite_difference_jacobian(const StateMap& rhs, const Vector& x);

struct EquilibriumReport {
  Vector location;
  Matrix jacobian;
  std::vector<std::complex<double>> eigenvalues;
  Classification classification = Classification::NonHyperbolic;
  int zero_count = 0;  // |lambda| < tolerance
  double tolerance = 0.0;
};

/// Finite-difference Jacobian, its eigenvalues, and a classification with
/// tolerance 1e-7 (1 + ||J||_F). An eigenvalue whose real part is within the
/// tolerance makes the point non-hyperbolic.
EquilibriumReport jacobian_at(const Vector& state, const StateMap& rhs);

void write_report(std::ostream& out, const std::string& label, const EquilibriumReport& report,
                  std::optional<bool> admissible = std::nullopt);

struct RankDeficiencyReport {
  int zero_count_dm = 0;
  bool hyperbolic = false;
  std::vector<std::complex<double>> dm_eigenvalues;
  /// Spectrum of the dC block of the linearisation at (y, 0); reported, not classified.
  std::vector<std::complex<double>> dC_eigenvalues;
};

/// Linearisation -(1 - alpha) Sigma of the m-equation at (m, C) = (y, 0).
RankDeficiencyReport rank_deficiency_check(const Vector& y, const Matrix& sigma, double alpha);

// Phase portraits -------------------------------------------------------------

struct PhaseWindow {
  double m_min = -1.0;
  double m_max = 4.0;
  double E_min = -1.0;
  double E_max = 17.0;

  bool operator==(const PhaseWindow&) const = default;
};

struct FieldPoint {
  double m = 0.0;
  double E = 0.0;
  double dm = 0.0;
  double dE = 0.0;
  bool feasible = true;  // E >= m^2
};

/// Zero of one RHS component located on a grid edge (or at a grid node).
struct NullclineMarker {
  double m = 0.0;
  double E = 0.0;
  int component = 0;  // 0: dm, 1: dE
};

struct VectorField {
  PhaseWindow window;
  int m_resolution = 0;
  int E_resolution = 0;
  std::vector<FieldPoint> points;  // E-major: index = i + m_resolution * j
  std::vector<NullclineMarker> markers;

  const FieldPoint& at(int i, int j) const { return points[static_cast<std::size_t>(i + m_resolution * j)]; }
  double m_spacing() const;
  double E_spacing() const;
};

VectorField vector_field_sample(const MomentLaw1D& law, const PhaseWindow& window, int m_resolution,
                                int E_resolution);

/// Columns m, E, dm, dE, feasible_flag.
void write_vector_field_csv(std::ostream& out, const VectorField& field);

/// Columns m, E, component.
void write_nullclines_csv(std::ostream& out, const VectorField& field);

}  // namespace eki::moments
