#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "eki/dynamics.hpp"
#include "eki/run_record.hpp"

namespace eki {

struct IntegratorConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  /// Discrepancy principle: stop at the first step with misfit <= threshold.
  std::optional<double> discrepancy_threshold;
  /// Diagnostics are recorded every `stride` steps; the stop rule is checked every step.
  int stride = 10;

  void validate() const;
  long steps() const;
};

/// Non-finite ensemble state, or a forward evaluation that failed on it.
/// Carries the step and the first bad member (-1 when unknown).
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(long step, Index member, double t);
  /// step < 0 when the failing step is unknown; the reason is then the whole message.
  NumericalAbort(long step, double t, const std::string& reason);

  long step() const { return step_; }
  Index member() const { return member_; }
  double time() const { return t_; }

 private:
  long step_;
  Index member_;
  double t_;
};

/// theta = (1/J) sum_j ||G(u^j) - p - eta||^2
double misfit(const ForwardImages& g, const Vector& clean, const Vector& eta);
double misfit(const Ensemble& e, const ForwardModel& model, const Vector& clean, const Vector& eta);

bool discrepancy_stop(double theta, double eta_norm_sq);

/// Computes the recorded quantities of a run. Without data the misfit is NaN;
/// without a reference point the residual is NaN.
class Diagnostics {
 public:
  Diagnostics() = default;

  Diagnostics& with_data(std::shared_ptr<const ForwardModel> model, Vector clean, Vector eta);
  Diagnostics& with_reference(Vector u_star);

  bool has_misfit() const { return clean_.has_value(); }

  /// Uses `images` when given, otherwise evaluates the model.
  double misfit_of(const Ensemble& e, const ForwardImages* images) const;
  DiagnosticRow evaluate(double t, const Ensemble& e, const ForwardImages* images) const;

 private:
  std::shared_ptr<const ForwardModel> model_;
  std::optional<Vector> clean_;
  std::optional<Vector> eta_;
  std::optional<Vector> u_star_;
};

struct IntegrationResult {
  Ensemble final_state;
  RunRecord record;
  long steps_taken = 0;
};

/// Called with the state at every step, before it is advanced.
using StepObserver = std::function<void(long step, double t, const Ensemble& e)>;

/// Explicit Euler u^{n+1} = u^n + dt * rhs(u^n) with a fixed step.
///
/// Stops at t_max or at the first step where the discrepancy rule holds
/// (that state is kept and stop_time is its time). Throws NumericalAbort as
/// soon as any member becomes non-finite or the law throws std::domain_error.
IntegrationResult euler_integrate(const Ensemble& e0, const EvolutionLaw& law, const IntegratorConfig& cfg,
                                  const Diagnostics& diagnostics = {}, const StepObserver& observer = {});

}  // namespace eki
