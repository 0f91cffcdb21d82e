// Command-line runner: `eki run <config>` and `eki compare <records...> --out <file>`.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eki/config.hpp"
#include "eki/experiments.hpp"
#include "eki/integrator.hpp"
#include "eki/run_record.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalAbort = 3;

int run_command(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                const std::optional<std::string>& out_dir, const std::vector<std::string>& overrides) {
  eki::ExperimentConfig config = eki::load_config(config_path);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw eki::ConfigError(item, "override must look like key=value");
    eki::set_field(config, item.substr(0, eq), item.substr(eq + 1));
  }
  if (seed) config.seed = *seed;
  if (out_dir) config.output_dir = *out_dir;
  eki::validate(config);

  const auto outputs = eki::run_experiment(config);
  for (const auto& file : outputs.files) std::cout << file.string() << '\n';
  return 0;
}

int compare_command(const std::vector<std::string>& paths, const std::string& out_path) {
  std::vector<eki::RunRecord> records;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& path : paths) {
    records.push_back(eki::read_record(path));
    inputs.push_back({{"path", path}, {"metadata", eki::record_metadata(records.back())}});
  }
  const auto comparison = eki::compare(records);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  eki::write_comparison_csv(out, comparison);
  eki::write_sidecar(out_path, {{"content", "record comparison"}, {"inputs", inputs}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Kalman inversion experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--seed", seed, "Override the seed");
  run->add_option("--out-dir", out_dir, "Override output_dir");
  run->add_option("--set", overrides, "Override any config key (key=value)");

  std::vector<std::string> record_paths;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "Tabulate previously written run records");
  cmp->add_option("records", record_paths, "Record CSV files")->required();
  cmp->add_option("--out", compare_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return run_command(config_path, seed, out_dir, overrides);
    return compare_command(record_paths, compare_out);
  } catch (const eki::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const eki::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
