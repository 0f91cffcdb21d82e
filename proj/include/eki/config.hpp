#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eki/moments.hpp"

namespace eki {

enum class ExperimentKind { PhasePortrait, VarianceDecay, Groundwater };
enum class Method { Classical, Stabilized, InflationOnly };

std::string to_string(ExperimentKind kind);
std::string to_string(Method method);

/// Invalid configuration; names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// One experiment, read from flat `key = value` text ('#' starts a comment).
///
/// Defaults depend on the experiment kind:
/// alpha = 0.1, beta = -1, y = 2 for the moment experiments; alpha = 0.1,
/// beta = -10, delta = 1, gamma = 4, J = 100, dt = 1e-3, f = 100 for the
/// groundwater benchmark.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::PhasePortrait;
  Method method = Method::Classical;

  double alpha = 0.1;
  double beta = -1.0;
  double y = 2.0;
  double dt = 1e-4;
  double t_max = 10.0;
  int stride = 100;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  // variance_decay
  std::vector<double> m0 = {1.0, 3.0};
  double c0 = 1.0;

  // phase_portrait
  moments::PhaseWindow window;
  int resolution = 51;

  // groundwater
  int ensemble_size = 100;
  double delta = 1.0;
  double gamma = 4.0;
  int n = 20;
  double force = 100.0;
  double sigma_scale = 1.0;
  std::uint64_t truth_seed = 7;
  bool stop_on_discrepancy = true;

  /// alpha actually used: 1 for the classical method.
  double effective_alpha() const;
  /// beta actually used: 0 for classical and inflation_only.
  double effective_beta() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Defaults for one experiment kind.
ExperimentConfig default_config(ExperimentKind kind);

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Text that parse_config reads back to an equal configuration.
std::string serialize(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);

/// Sets one key from its text form; throws ConfigError on unknown keys or bad values.
void set_field(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

}  // namespace eki
