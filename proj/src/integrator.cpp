#include "eki/integrator.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace eki {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string abort_message(long step, Index member, double t) {
  return "non-finite ensemble state at step " + std::to_string(step) + " (t=" + format_double(t) +
         "), member " + std::to_string(member);
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (stride < 1) throw std::invalid_argument("diagnostics stride must be at least 1");
  if (discrepancy_threshold && !(*discrepancy_threshold >= 0.0)) {
    throw std::invalid_argument("discrepancy threshold must be non-negative");
  }
}

long IntegratorConfig::steps() const { return static_cast<long>(std::floor(t_max / dt + 1e-9)); }

NumericalAbort::NumericalAbort(long step, Index member, double t)
    : std::runtime_error(abort_message(step, member, t)), step_(step), member_(member), t_(t) {}

NumericalAbort::NumericalAbort(long step, double t, const std::string& reason)
    : std::runtime_error(step < 0 ? reason
                                  : "aborted at step " + std::to_string(step) + " (t=" + format_double(t) + "): " + reason),
      step_(step),
      member_(-1),
      t_(t) {}

double misfit(const ForwardImages& g, const Vector& clean, const Vector& eta) {
  if (clean.size() != g.dim() || eta.size() != g.dim()) {
    throw std::invalid_argument("misfit: observation vectors do not match the forward images");
  }
  const Vector target = clean + eta;
  return (g.images.rowwise() - target.transpose()).rowwise().squaredNorm().mean();
}

double misfit(const Ensemble& e, const ForwardModel& model, const Vector& clean, const Vector& eta) {
  return misfit(evaluate(model, e), clean, eta);
}

bool discrepancy_stop(double theta, double eta_norm_sq) { return theta <= eta_norm_sq; }

Diagnostics& Diagnostics::with_data(std::shared_ptr<const ForwardModel> model, Vector clean, Vector eta) {
  if (clean.size() != eta.size()) {
    throw std::invalid_argument("clean observations and noise differ in length");
  }
  model_ = std::move(model);
  clean_ = std::move(clean);
  eta_ = std::move(eta);
  return *this;
}

Diagnostics& Diagnostics::with_reference(Vector u_star) {
  u_star_ = std::move(u_star);
  return *this;
}

double Diagnostics::misfit_of(const Ensemble& e, const ForwardImages* images) const {
  if (!clean_) return kNaN;
  if (images) return misfit(*images, *clean_, *eta_);
  if (!model_) throw std::logic_error("misfit needs forward images or a model");
  return misfit(e, *model_, *clean_, *eta_);
}

DiagnosticRow Diagnostics::evaluate(double t, const Ensemble& e, const ForwardImages* images) const {
  DiagnosticRow row;
  row.t = t;
  row.misfit = misfit_of(e, images);
  row.residual_mean = u_star_ ? ensemble_residual(e, *u_star_).mean() : kNaN;
  row.spread_mean_square = ensemble_spread(e).mean_square;
  row.variance_trace = covariance_uu(e).trace();
  return row;
}

IntegrationResult euler_integrate(const Ensemble& e0, const EvolutionLaw& law, const IntegratorConfig& cfg,
                                  const Diagnostics& diagnostics, const StepObserver& observer) {
  cfg.validate();
  if (cfg.discrepancy_threshold && !diagnostics.has_misfit()) {
    throw std::invalid_argument("discrepancy stopping needs diagnostics with observation data");
  }

  const long total = cfg.steps();
  MemberMatrix state = e0.members();
  RunRecord record;
  long n = 0;
  for (;; ++n) {
    const double t = static_cast<double>(n) * cfg.dt;
    const Ensemble current(state);
    if (observer) observer(n, t, current);

    Velocity velocity;
    try {
      velocity = law(current);
    } catch (const std::domain_error& e) {
      throw NumericalAbort(n, t, std::string("forward evaluation failed: ") + e.what());
    }
    const ForwardImages* images = velocity.images ? &*velocity.images : nullptr;

    bool stop = false;
    if (cfg.discrepancy_threshold) {
      stop = discrepancy_stop(diagnostics.misfit_of(current, images), *cfg.discrepancy_threshold);
    }
    const bool last = stop || n == total;
    if (n % cfg.stride == 0 || last) {
      record.append(diagnostics.evaluate(t, current, images));
    }
    if (stop) record.stop_time = t;
    if (last) break;

    state += cfg.dt * velocity.rates;
    for (Index j = 0; j < state.rows(); ++j) {
      if (!state.row(j).allFinite()) {
        throw NumericalAbort(n + 1, j, static_cast<double>(n + 1) * cfg.dt);
      }
    }
  }
  return {Ensemble(std::move(state)), std::move(record), n};
}

}  // namespace eki
