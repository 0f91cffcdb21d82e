#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace eki {

/// 17 significant digits, so that doubles survive a text round trip and equal
/// runs produce equal bytes.
std::string format_double(double value);

/// Diagnostics at one recorded time. NaN marks a quantity the run cannot
/// provide (no data, no reference solution).
struct DiagnosticRow {
  double t = 0.0;
  double misfit = 0.0;
  double residual_mean = 0.0;
  double spread_mean_square = 0.0;
  double variance_trace = 0.0;
};

/// Time series of one run plus enough metadata to reproduce it.
struct RunRecord {
  std::vector<double> times;
  std::vector<double> misfit;
  std::vector<double> mean_residual;
  std::vector<double> mean_square_spread;
  std::vector<double> variance_trace;
  std::optional<double> stop_time;
  std::uint64_t seed = 0;
  nlohmann::json config_echo = nlohmann::json::object();

  void append(const DiagnosticRow& row);
  std::size_t size() const { return times.size(); }
  DiagnosticRow row(std::size_t i) const;
};

/// CSV columns: t, misfit, residual_mean, spread_mean_square, variance_trace.
void write_record_csv(std::ostream& out, const RunRecord& record);

/// Seed, stop time and the configuration echo.
nlohmann::json record_metadata(const RunRecord& record);

/// Writes `path` and its `<path>.meta.json` sidecar.
void write_record(const std::filesystem::path& path, const RunRecord& record);

/// Reads a record written by write_record; the sidecar is optional.
RunRecord read_record(const std::filesystem::path& path);

/// `<path>.meta.json`
std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& metadata);

}  // namespace eki
