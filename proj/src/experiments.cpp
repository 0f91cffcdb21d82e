#include "eki/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace eki {

namespace fs = std::filesystem;

namespace {

nlohmann::json file_metadata(const ExperimentConfig& config, const std::string& content) {
  nlohmann::json meta;
  meta["content"] = content;
  meta["seed"] = config.seed;
  meta["config"] = to_json(config);
  return meta;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string short_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", value);
  return buffer;
}

moments::ScalarModel scalar_model(const ExperimentConfig& config) { return {1.0, 1.0, config.y}; }

RunOutputs run_phase_portrait(const ExperimentConfig& config, const fs::path& dir) {
  const auto law = moment_law(config);
  const auto field = moments::vector_field_sample(law, config.window, config.resolution, config.resolution);

  RunOutputs outputs;
  const fs::path field_path = dir / "vector_field.csv";
  {
    auto out = open_output(field_path);
    moments::write_vector_field_csv(out, field);
  }
  write_sidecar(field_path, file_metadata(config, "moment vector field"));
  outputs.files.push_back(field_path);

  const fs::path nullcline_path = dir / "nullclines.csv";
  {
    auto out = open_output(nullcline_path);
    moments::write_nullclines_csv(out, field);
  }
  write_sidecar(nullcline_path, file_metadata(config, "nullcline markers"));
  outputs.files.push_back(nullcline_path);

  const auto equilibria = moments::equilibria_1d(scalar_model(config), config.effective_alpha());
  std::vector<moments::Equilibrium1D> points{equilibria.target};
  for (const auto& e : equilibria.sample({-1.0, 0.0, 1.0})) points.push_back(e);
  const auto rhs = moments::as_state_map(law);
  const fs::path report_path = dir / "equilibria.txt";
  {
    auto out = open_output(report_path);
    for (const auto& point : points) {
      const Vector location = Eigen::Vector2d(point.location.m, point.location.E);
      moments::write_report(out, point.label, moments::jacobian_at(location, rhs), point.admissible);
    }
  }
  write_sidecar(report_path, file_metadata(config, "equilibrium classification"));
  outputs.files.push_back(report_path);
  return outputs;
}

RunOutputs run_variance_decay(const ExperimentConfig& config, const fs::path& dir) {
  RunOutputs outputs;
  for (double m0 : config.m0) {
    const fs::path path = dir / ("variance_decay_m0_" + short_number(m0) + ".csv");
    write_record(path, variance_decay_record(config, m0));
    outputs.files.push_back(path);
  }
  return outputs;
}

RunOutputs run_groundwater_experiment(const ExperimentConfig& config, const fs::path& dir) {
  const GroundwaterSetup setup = groundwater_setup(config);
  const IntegrationResult result = run_groundwater(setup, config);
  const GroundwaterModel& model = *setup.model;
  const SquareGrid& grid = model.grid();

  RunOutputs outputs;
  const fs::path record_path = dir / "record.csv";
  write_record(record_path, result.record);
  outputs.files.push_back(record_path);

  const Vector mean = ensemble_mean(result.final_state);
  const auto dump_field = [&](const std::string& name, const Vector& nodal, const std::string& content) {
    const fs::path path = dir / name;
    {
      auto out = open_output(path);
      write_field_csv(out, grid, nodal);
    }
    write_sidecar(path, file_metadata(config, content));
    outputs.files.push_back(path);
  };
  const auto dump_observations = [&](const std::string& name, const Vector& values, const std::string& content) {
    const fs::path path = dir / name;
    {
      auto out = open_output(path);
      write_node_values_csv(out, grid, model.observation_nodes(), values);
    }
    write_sidecar(path, file_metadata(config, content));
    outputs.files.push_back(path);
  };

  dump_field("truth.csv", grid.extend(setup.truth), "true log conductivity");
  dump_observations("observations_clean.csv", setup.clean, "noise-free observations of the true pressure");
  dump_observations("observations_noisy.csv", setup.problem.data, "noisy observations");
  dump_field("reconstruction.csv", grid.extend(mean), "ensemble mean log conductivity at the final time");
  dump_field("reconstructed_pressure.csv", model.fem_solve(mean), "pressure for the reconstructed conductivity");

  const std::size_t last = result.record.size() - 1;
  nlohmann::json summary;
  summary["method"] = to_string(config.method);
  summary["alpha"] = config.effective_alpha();
  summary["beta"] = config.effective_beta();
  summary["stop_time"] = result.record.stop_time ? nlohmann::json(*result.record.stop_time) : nlohmann::json(nullptr);
  summary["met_discrepancy"] = result.record.stop_time.has_value();
  summary["steps_taken"] = result.steps_taken;
  summary["final_time"] = result.record.times[last];
  summary["final_misfit"] = result.record.misfit[last];
  summary["discrepancy_threshold"] = setup.noise.norm_sq;
  summary["final_residual"] = result.record.mean_residual[last];
  summary["final_spread"] = result.record.mean_square_spread[last];
  const fs::path summary_path = dir / "summary.json";
  {
    auto out = open_output(summary_path);
    out << summary.dump(2) << '\n';
  }
  write_sidecar(summary_path, file_metadata(config, "stop-time summary"));
  outputs.files.push_back(summary_path);
  return outputs;
}

double ratio(double value, double reference) {
  if (value == reference || (std::isnan(value) && std::isnan(reference))) return 1.0;
  return value / reference;
}

double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t) {
  const auto upper = std::upper_bound(times.begin(), times.end(), t);
  if (upper == times.begin()) return values.front();
  const auto i = static_cast<std::size_t>(upper - times.begin()) - 1;
  if (times[i] == t || i + 1 == times.size()) return values[i];
  const double w = (t - times[i]) / (times[i + 1] - times[i]);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

DiagnosticRow resample(const RunRecord& r, double t) {
  return {t, interpolate(r.times, r.misfit, t), interpolate(r.times, r.mean_residual, t),
          interpolate(r.times, r.mean_square_spread, t), interpolate(r.times, r.variance_trace, t)};
}

}  // namespace

moments::MomentLaw1D moment_law(const ExperimentConfig& config) {
  const auto model = scalar_model(config);
  if (config.method == Method::Classical) return moments::classical_moment_law(model);
  return moments::stabilized_moment_law(model, {config.effective_alpha(), config.effective_beta(), std::nullopt});
}

RunRecord variance_decay_record(const ExperimentConfig& config, double m0) {
  const moments::Inflation1D inflation{config.effective_alpha(), config.effective_beta(), std::nullopt};
  std::vector<moments::VarianceSample> samples;
  try {
    samples = moments::integrate_variance_form(scalar_model(config), inflation, {m0, config.c0}, config.dt, config.t_max,
                                               config.stride);
  } catch (const std::domain_error& e) {
    throw NumericalAbort(-1, std::numeric_limits<double>::quiet_NaN(), e.what());
  }
  const double y = config.y;
  RunRecord record;
  record.seed = config.seed;
  record.config_echo = to_json(config);
  record.config_echo["m0_run"] = m0;
  for (const auto& s : samples) {
    const double c = s.state.C;
    const double misfit = c + (s.state.m - y) * (s.state.m - y);
    record.append({s.t, misfit, misfit, c, c});
  }
  return record;
}

GroundwaterSetup groundwater_setup(const ExperimentConfig& config) {
  validate(config);
  auto model = std::make_shared<const GroundwaterModel>(config.n, config.force);
  const SquareGrid& grid = model->grid();
  const Index d = model->control_dim();
  const Index k = model->observation_dim();

  Vector truth = PriorSampler(grid, 1.0, config.truth_seed).sample(1).member(0);
  Vector clean = model->apply(truth);
  Noise noise = make_noise(config.gamma, k, config.seed + 1);

  InverseProblem problem{model, Matrix::Identity(k, k) / (config.gamma * config.gamma), clean + noise.eta};
  problem.validate();

  Ensemble initial = PriorSampler(grid, config.delta, config.seed).sample(config.ensemble_size);

  StabilizationParams params;
  if (config.method == Method::Classical) {
    params = StabilizationParams::classical(d, k);
  } else {
    // Sigma-bar Sigma-bar^T / d has mean eigenvalue 1; rescale it to the mean
    // variance of the delta = 1 prior.
    const double prior_variance = PriorSampler(grid, 1.0, 0).covariance().trace() / static_cast<double>(d);
    const Matrix bar = standard_normal_matrix(d, d, config.seed + 2);
    Matrix sigma = config.sigma_scale * prior_variance * (bar * bar.transpose()) / static_cast<double>(d);
    sigma = 0.5 * (sigma + sigma.transpose());
    params = StabilizationParams::with_inflation(*model, config.effective_alpha(), config.effective_beta(),
                                                 std::move(sigma), ensemble_mean(initial));
  }
  return {model,          std::move(truth),   std::move(clean),  std::move(noise),
          std::move(problem), std::move(initial), std::move(params)};
}

IntegrationResult run_groundwater(const GroundwaterSetup& setup, const ExperimentConfig& config) {
  IntegratorConfig integrator;
  integrator.dt = config.dt;
  integrator.t_max = config.t_max;
  integrator.stride = config.stride;
  if (config.stop_on_discrepancy) integrator.discrepancy_threshold = setup.noise.norm_sq;

  Diagnostics diagnostics;
  diagnostics.with_data(setup.model, setup.clean, setup.noise.eta).with_reference(setup.truth);

  const EvolutionLaw law = config.method == Method::Classical ? classical_law(setup.problem)
                                                              : stabilized_law(setup.problem, setup.params);
  IntegrationResult result = euler_integrate(setup.initial, law, integrator, diagnostics);
  result.record.seed = config.seed;
  result.record.config_echo = to_json(config);
  return result;
}

RunOutputs run_experiment(const ExperimentConfig& config) {
  validate(config);
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  switch (config.experiment) {
    case ExperimentKind::PhasePortrait:
      return run_phase_portrait(config, dir);
    case ExperimentKind::VarianceDecay:
      return run_variance_decay(config, dir);
    case ExperimentKind::Groundwater:
      return run_groundwater_experiment(config, dir);
  }
  throw std::logic_error("unhandled experiment kind");
}

Comparison compare(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("compare needs at least one record");
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.size() == 0) throw std::invalid_argument("compare: record without samples");
    t_lo = std::max(t_lo, r.times.front());
    t_hi = std::min(t_hi, r.times.back());
  }
  if (t_lo > t_hi) throw std::invalid_argument("compare: records share no common time interval");

  std::vector<double> grid;
  std::size_t fewest = std::numeric_limits<std::size_t>::max();
  for (const auto& r : records) {
    std::vector<double> inside;
    std::copy_if(r.times.begin(), r.times.end(), std::back_inserter(inside),
                 [&](double t) { return t >= t_lo && t <= t_hi; });
    if (inside.size() < fewest) {
      fewest = inside.size();
      grid = std::move(inside);
    }
  }

  Comparison c;
  for (double t : grid) {
    ComparisonRow row;
    row.t = t;
    for (const auto& r : records) row.values.push_back(resample(r, t));
    const DiagnosticRow& base = row.values.front();
    for (const auto& v : row.values) {
      row.ratios.push_back({t, ratio(v.misfit, base.misfit), ratio(v.residual_mean, base.residual_mean),
                            ratio(v.spread_mean_square, base.spread_mean_square),
                            ratio(v.variance_trace, base.variance_trace)});
    }
    c.rows.push_back(std::move(row));
  }

  const auto cost = [](const RunRecord& r) { return r.stop_time.value_or(r.times.back()); };
  for (const auto& r : records) {
    c.stop_times.push_back(r.stop_time);
    c.relative_cost.push_back(ratio(cost(r), cost(records.front())));
  }
  return c;
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  const std::size_t n = c.stop_times.size();
  static constexpr const char* kNames[] = {"misfit", "residual_mean", "spread_mean_square", "variance_trace"};
  out << 't';
  for (std::size_t r = 0; r < n; ++r) {
    for (const char* name : kNames) out << ',' << name << '_' << r;
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (const char* name : kNames) out << ',' << name << "_ratio_" << r;
  }
  out << '\n';

  const auto write_values = [&](const DiagnosticRow& v) {
    out << ',' << format_double(v.misfit) << ',' << format_double(v.residual_mean) << ','
        << format_double(v.spread_mean_square) << ',' << format_double(v.variance_trace);
  };
  for (const auto& row : c.rows) {
    out << format_double(row.t);
    for (const auto& v : row.values) write_values(v);
    for (const auto& v : row.ratios) write_values(v);
    out << '\n';
  }

  // Summary rows: one value per record, in the misfit column of that record.
  const auto write_summary = [&](const std::string& label, const auto& value_of) {
    out << label;
    for (std::size_t r = 0; r < n; ++r) out << ',' << value_of(r) << ",,,";
    for (std::size_t r = 0; r < n; ++r) out << ",,,,";
    out << '\n';
  };
  write_summary("stop_time", [&](std::size_t r) {
    return c.stop_times[r] ? format_double(*c.stop_times[r]) : std::string("none");
  });
  write_summary("relative_cost", [&](std::size_t r) { return format_double(c.relative_cost[r]); });
}

}  // namespace eki
