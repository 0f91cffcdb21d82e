#include "eki/run_record.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eki {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void RunRecord::append(const DiagnosticRow& row) {
  times.push_back(row.t);
  misfit.push_back(row.misfit);
  mean_residual.push_back(row.residual_mean);
  mean_square_spread.push_back(row.spread_mean_square);
  variance_trace.push_back(row.variance_trace);
}

DiagnosticRow RunRecord::row(std::size_t i) const {
  return {times.at(i), misfit.at(i), mean_residual.at(i), mean_square_spread.at(i), variance_trace.at(i)};
}

void write_record_csv(std::ostream& out, const RunRecord& record) {
  out << "t,misfit,residual_mean,spread_mean_square,variance_trace\n";
  for (std::size_t i = 0; i < record.size(); ++i) {
    out << format_double(record.times[i]) << ',' << format_double(record.misfit[i]) << ','
        << format_double(record.mean_residual[i]) << ',' << format_double(record.mean_square_spread[i]) << ','
        << format_double(record.variance_trace[i]) << '\n';
  }
}

nlohmann::json record_metadata(const RunRecord& record) {
  nlohmann::json meta;
  meta["seed"] = record.seed;
  meta["stop_time"] = record.stop_time ? nlohmann::json(*record.stop_time) : nlohmann::json(nullptr);
  meta["config"] = record.config_echo;
  return meta;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& metadata) {
  std::ofstream out(sidecar_path(path));
  if (!out) {
    throw std::runtime_error("cannot write " + sidecar_path(path).string());
  }
  out << metadata.dump(2) << '\n';
}

void write_record(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  write_record_csv(out, record);
  write_sidecar(path, record_metadata(record));
}

namespace {

double parse_double(const std::string& field) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return HUGE_VAL;
  if (field == "-inf") return -HUGE_VAL;
  std::size_t used = 0;
  const double value = std::stod(field, &used);
  if (used != field.size()) {
    throw std::invalid_argument("malformed number '" + field + "'");
  }
  return value;
}

}  // namespace

RunRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  RunRecord record;
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,misfit", 0) != 0) {
    throw std::runtime_error(path.string() + " is not a run record (bad header)");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(fields, cell, ',')) {
      values.push_back(parse_double(cell));
    }
    if (values.size() != 5) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 5 columns");
    }
    record.append({values[0], values[1], values[2], values[3], values[4]});
  }

  std::ifstream meta_in(sidecar_path(path));
  if (meta_in) {
    const nlohmann::json meta = nlohmann::json::parse(meta_in);
    record.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("stop_time") && !meta["stop_time"].is_null()) {
      record.stop_time = meta["stop_time"].get<double>();
    }
    if (meta.contains("config")) record.config_echo = meta["config"];
  }
  return record;
}

}  // namespace eki
