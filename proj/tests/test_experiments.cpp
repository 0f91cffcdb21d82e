#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "eki/config.hpp"
#include "eki/experiments.hpp"
#include "eki/run_record.hpp"

using namespace eki;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eki_test_experiments_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

ExperimentConfig variance_config(Method method, double beta, const fs::path& dir) {
  ExperimentConfig config = default_config(ExperimentKind::VarianceDecay);
  config.method = method;
  config.alpha = 0.1;
  config.beta = beta;
  config.output_dir = dir.string();
  return config;
}

double value_at(const RunRecord& record, double t) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (std::abs(record.times[i] - t) < 1e-9) return record.mean_square_spread[i];
  }
  FAIL("time not recorded");
  return 0.0;
}

int run_cli(const std::string& args) {
  const std::string command = std::string(EKI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig config = parse_config(
      "# groundwater\n"
      "experiment = groundwater\n"
      "method = stabilized   # inline comment\n"
      "alpha = 0.9\n"
      "beta = -0.1\n"
      "delta = 1e-2\n"
      "seed = 11\n"
      "stop_on_discrepancy = false\n");
  CHECK(config.experiment == ExperimentKind::Groundwater);
  CHECK(config.method == Method::Stabilized);
  CHECK(config.alpha == 0.9);
  CHECK(config.beta == -0.1);
  CHECK(config.delta == 0.01);
  CHECK(config.seed == 11);
  CHECK_FALSE(config.stop_on_discrepancy);
  CHECK(config.ensemble_size == 100);
  CHECK(config.gamma == 4.0);
  CHECK(config.dt == 1e-3);
  CHECK(config.force == 100.0);
  CHECK(config.n == 20);

  const ExperimentConfig classical = parse_config("experiment = groundwater\nmethod = classical\n");
  CHECK(classical.effective_alpha() == 1.0);
  CHECK(classical.effective_beta() == 0.0);
  const ExperimentConfig inflation = parse_config("experiment = variance_decay\nmethod = inflation_only\n");
  CHECK(inflation.effective_alpha() == 0.1);
  CHECK(inflation.effective_beta() == 0.0);
}

TEST_CASE("config round trip") {
  ExperimentConfig config = default_config(ExperimentKind::PhasePortrait);
  config.method = Method::Stabilized;
  config.alpha = 0.123456789012345678;
  config.beta = -1.0 / 3.0;
  config.window.m_max = 4.5;
  config.m0 = {0.1, 1.0 / 7.0};
  config.seed = 1234567890123ULL;
  config.output_dir = "some/where";
  CHECK(parse_config(serialize(config)) == config);

  for (auto kind : {ExperimentKind::VarianceDecay, ExperimentKind::Groundwater}) {
    const ExperimentConfig defaults = default_config(kind);
    CHECK(parse_config(serialize(defaults)) == defaults);
  }
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const std::string& text) {
    try {
      validate(parse_config(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of("experiment = groundwater\n") == "method");
  CHECK(field_of("method = classical\n") == "experiment");
  CHECK(field_of("experiment = groundwater\nmethod = classical\nwidth = 3\n") == "width");
  CHECK(field_of("experiment = groundwater\nmethod = classical\ndt = -1\n") == "dt");
  CHECK(field_of("experiment = groundwater\nmethod = classical\nJ = abc\n") == "J");
  CHECK(field_of("experiment = variance_decay\nmethod = inflation_only\nbeta = -1\n") == "beta");
  CHECK(field_of("experiment = groundwater\nmethod = classical\nalpha = 1\nalpha = 2\n") == "alpha");
  CHECK(field_of("experiment = groundwater\nmethod = magic\n") == "method");
  CHECK(field_of("experiment = variance_decay\nmethod = stabilized\n") == "none");
}

TEST_CASE("variance decay output") {
  const fs::path dir = scratch_dir("variance");
  ExperimentConfig config = variance_config(Method::Classical, 0.0, dir);
  config.t_max = 1.0;
  const RunOutputs outputs = run_experiment(config);
  REQUIRE(outputs.files.size() == 2);
  const RunRecord record = read_record(dir / "variance_decay_m0_1.csv");
  CHECK(std::abs(value_at(record, 0.5) - 0.5) < 1e-3);
  CHECK(record.seed == config.seed);
  for (const auto& file : outputs.files) {
    REQUIRE(fs::exists(sidecar_path(file)));
    const auto meta = nlohmann::json::parse(slurp(sidecar_path(file)));
    CHECK(meta.at("seed") == config.seed);
    CHECK(meta.at("config").at("method") == "classical");
  }
}

TEST_CASE("phase portrait output") {
  const fs::path dir = scratch_dir("phase");
  ExperimentConfig config = default_config(ExperimentKind::PhasePortrait);
  config.method = Method::Stabilized;
  config.output_dir = dir.string();
  const RunOutputs outputs = run_experiment(config);
  CHECK(outputs.files.size() == 3);
  const std::string report = slurp(dir / "equilibria.txt");
  const auto first = report.find("end\n");
  REQUIRE(first != std::string::npos);
  const std::string target = report.substr(0, first);
  CHECK(target.find("location 2 4\n") != std::string::npos);
  CHECK(target.find("classification hyperbolic-stable\n") != std::string::npos);
  CHECK(report.find("admissible false\n") != std::string::npos);
  CHECK(slurp(dir / "vector_field.csv").rfind("m,E,dm,dE,feasible_flag\n", 0) == 0);
  for (const auto& file : outputs.files) CHECK(fs::exists(sidecar_path(file)));
}

TEST_CASE("runs are deterministic") {
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  ExperimentConfig config = variance_config(Method::Stabilized, -1.0, a);
  config.t_max = 2.0;
  const RunOutputs first = run_experiment(config);
  config.output_dir = b.string();
  const RunOutputs second = run_experiment(config);
  REQUIRE(first.files.size() == second.files.size());
  for (std::size_t i = 0; i < first.files.size(); ++i) {
    CHECK(first.files[i].filename() == second.files[i].filename());
    CHECK(slurp(first.files[i]) == slurp(second.files[i]));
  }
}

TEST_CASE("record comparison") {
  CHECK_THROWS_AS(compare({}), std::invalid_argument);

  const fs::path dir = scratch_dir("compare");
  const RunRecord classical = variance_decay_record(variance_config(Method::Classical, 0.0, dir), 1.0);
  const RunRecord stabilized = variance_decay_record(variance_config(Method::Stabilized, -1.0, dir), 1.0);

  const Comparison single = compare({classical});
  REQUIRE(single.rows.size() == classical.size());
  for (std::size_t i = 0; i < classical.size(); ++i) {
    CHECK(single.rows[i].t == classical.times[i]);
    CHECK(single.rows[i].values[0].spread_mean_square == classical.mean_square_spread[i]);
    CHECK(single.rows[i].values[0].misfit == classical.misfit[i]);
  }

  const Comparison same = compare({classical, classical});
  for (const auto& row : same.rows) {
    CHECK(row.ratios[1].misfit == 1.0);
    CHECK(row.ratios[1].residual_mean == 1.0);
    CHECK(row.ratios[1].spread_mean_square == 1.0);
    CHECK(row.ratios[1].variance_trace == 1.0);
  }
  CHECK(same.relative_cost[1] == 1.0);

  const Comparison pair = compare({classical, stabilized});
  bool checked = false;
  for (const auto& row : pair.rows) {
    if (std::abs(row.t - 5.0) < 1e-9) {
      CHECK(row.ratios[1].spread_mean_square <= 0.1);
      checked = true;
    }
  }
  CHECK(checked);

  std::ostringstream csv;
  write_comparison_csv(csv, pair);
  const std::string text = csv.str();
  CHECK(text.rfind("t,misfit_0,", 0) == 0);
  CHECK(text.find("\nstop_time,") != std::string::npos);
  CHECK(text.find("\nrelative_cost,") != std::string::npos);
}

TEST_CASE("comparison resamples onto the coarser grid") {
  RunRecord fine;
  RunRecord coarse;
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.1 * i;
    fine.append({t, 2.0 * t, t, t, t});
    if (i % 2 == 0) coarse.append({t, 4.0 * t, t, t, t});
  }
  coarse.stop_time = 0.5;
  const Comparison result = compare({fine, coarse});
  CHECK(result.rows.size() == coarse.size());
  for (const auto& row : result.rows) {
    CHECK(row.values[0].misfit == doctest::Approx(2.0 * row.t));
    if (row.t > 0.0) CHECK(row.ratios[1].misfit == doctest::Approx(2.0));
  }
  CHECK_FALSE(result.stop_times[0].has_value());
  CHECK(result.relative_cost[1] == doctest::Approx(0.5));
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch_dir("cli");
  {
    std::ofstream cfg(dir / "good.cfg");
    cfg << "experiment = variance_decay\nmethod = classical\nt_max = 0.1\nstride = 10\n";
  }
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "experiment = variance_decay\nmethod = classical\ndt = 0\n";
  }
  {
    std::ofstream cfg(dir / "blow.cfg");
    cfg << "experiment = variance_decay\nmethod = classical\ndt = 1\nt_max = 100\nm0 = 100\nc0 = 5\n";
  }
  const std::string out = " --out-dir " + (dir / "out").string();
  CHECK(run_cli("run " + (dir / "good.cfg").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "variance_decay_m0_1.csv"));
  CHECK(run_cli("run " + (dir / "bad.cfg").string() + out) == 2);
  CHECK(run_cli("run " + (dir / "good.cfg").string() + " --set nonsense=1" + out) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run " + (dir / "blow.cfg").string() + out) == 3);

  const std::string records = (dir / "out" / "variance_decay_m0_1.csv").string() + " " +
                              (dir / "out" / "variance_decay_m0_3.csv").string();
  CHECK(run_cli("compare " + records + " --out " + (dir / "cmp.csv").string()) == 0);
  CHECK(fs::exists(dir / "cmp.csv"));
  CHECK(fs::exists(sidecar_path(dir / "cmp.csv")));
}
