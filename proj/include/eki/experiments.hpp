#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "eki/config.hpp"
#include "eki/dynamics.hpp"
#include "eki/groundwater.hpp"
#include "eki/integrator.hpp"
#include "eki/moments.hpp"
#include "eki/prior.hpp"

namespace eki {

/// Files written by one run, relative paths already joined with output_dir.
struct RunOutputs {
  std::vector<std::filesystem::path> files;
};

/// Runs one experiment and writes its outputs (each with a `.meta.json`
/// sidecar) below config.output_dir. Throws ConfigError for invalid
/// configurations and NumericalAbort when the ensemble blows up.
RunOutputs run_experiment(const ExperimentConfig& config);

/// The right-hand side a moment experiment integrates: G = Gamma = 1, datum y.
moments::MomentLaw1D moment_law(const ExperimentConfig& config);

/// C(t) series for one initial mean, integrated in (m, C) form, as a record
/// with misfit = residual = C + (m - y)^2 (= E - 2 y m + y^2, u* = y) and
/// spread = variance = C.
RunRecord variance_decay_record(const ExperimentConfig& config, double m0);

/// Everything a groundwater run needs. Seeds: initial ensemble `seed`, noise
/// `seed + 1`, inflation matrix `seed + 2`; the truth is a draw from the
/// delta = 1 prior with `truth_seed`. The inflation matrix is
/// sigma_scale * v * Sigma-bar Sigma-bar^T / d with Sigma-bar standard normal
/// and v the mean variance of the delta = 1 prior.
struct GroundwaterSetup {
  std::shared_ptr<const GroundwaterModel> model;
  Vector truth;  // interior log conductivity
  Vector clean;  // G(truth)
  Noise noise;
  InverseProblem problem;
  Ensemble initial;
  StabilizationParams params;
};

GroundwaterSetup groundwater_setup(const ExperimentConfig& config);

/// Euler integration with the discrepancy rule (when enabled) and full diagnostics.
IntegrationResult run_groundwater(const GroundwaterSetup& setup, const ExperimentConfig& config);

// Record comparison -----------------------------------------------------------

struct ComparisonRow {
  double t = 0.0;
  std::vector<DiagnosticRow> values;  // one per record
  std::vector<DiagnosticRow> ratios;  // value_r / value_0; equal values give 1
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<std::optional<double>> stop_times;
  /// Cost of run r over cost of run 0; the cost is the stop time, or the
  /// last recorded time when the run never stopped.
  std::vector<double> relative_cost;
};

/// Resamples every record onto the times of the coarsest one (fewest samples)
/// within the common horizon, by linear interpolation.
Comparison compare(const std::vector<RunRecord>& records);

/// Table with one row per time, then `stop_time` and `relative_cost` rows.
void write_comparison_csv(std::ostream& out, const Comparison& comparison);

}  // namespace eki
