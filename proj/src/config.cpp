#include "eki/config.hpp"

#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "eki/run_record.hpp"

namespace eki {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
}

long long parse_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
}

int parse_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(key, "integer out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

ExperimentKind parse_kind(const std::string& text) {
  if (text == "phase_portrait") return ExperimentKind::PhasePortrait;
  if (text == "variance_decay") return ExperimentKind::VarianceDecay;
  if (text == "groundwater") return ExperimentKind::Groundwater;
  throw ConfigError("experiment", "unknown experiment '" + text +
                                      "' (expected phase_portrait, variance_decay or groundwater)");
}

Method parse_method(const std::string& text) {
  if (text == "classical") return Method::Classical;
  if (text == "stabilized") return Method::Stabilized;
  if (text == "inflation_only") return Method::InflationOnly;
  throw ConfigError("method", "unknown method '" + text + "' (expected classical, stabilized or inflation_only)");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    values.push_back(parse_number(key, trim(item)));
  }
  if (values.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return values;
}

std::vector<std::pair<std::string, std::string>> read_pairs(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::stringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "missing key");
    for (const auto& [seen, unused] : pairs) {
      if (seen == key) throw ConfigError(key, "given more than once");
    }
    pairs.emplace_back(std::move(key), std::move(value));
  }
  return pairs;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::PhasePortrait:
      return "phase_portrait";
    case ExperimentKind::VarianceDecay:
      return "variance_decay";
    case ExperimentKind::Groundwater:
      return "groundwater";
  }
  return "unknown";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Classical:
      return "classical";
    case Method::Stabilized:
      return "stabilized";
    case Method::InflationOnly:
      return "inflation_only";
  }
  return "unknown";
}

double ExperimentConfig::effective_alpha() const { return method == Method::Classical ? 1.0 : alpha; }

double ExperimentConfig::effective_beta() const { return method == Method::Stabilized ? beta : 0.0; }

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::PhasePortrait:
    case ExperimentKind::VarianceDecay:
      break;
    case ExperimentKind::Groundwater:
      c.beta = -10.0;
      c.dt = 1e-3;
      c.t_max = 1.0;
      c.stride = 10;
      break;
  }
  return c;
}

void set_field(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "experiment") {
    c.experiment = parse_kind(value);
  } else if (key == "method") {
    c.method = parse_method(value);
  } else if (key == "alpha") {
    c.alpha = parse_number(key, value);
  } else if (key == "beta") {
    c.beta = parse_number(key, value);
  } else if (key == "y") {
    c.y = parse_number(key, value);
  } else if (key == "dt") {
    c.dt = parse_number(key, value);
  } else if (key == "t_max") {
    c.t_max = parse_number(key, value);
  } else if (key == "stride") {
    c.stride = parse_int(key, value);
  } else if (key == "seed") {
    c.seed = parse_seed(key, value);
  } else if (key == "output_dir") {
    if (value.empty()) throw ConfigError(key, "must not be empty");
    c.output_dir = value;
  } else if (key == "m0") {
    c.m0 = parse_list(key, value);
  } else if (key == "c0") {
    c.c0 = parse_number(key, value);
  } else if (key == "m_min") {
    c.window.m_min = parse_number(key, value);
  } else if (key == "m_max") {
    c.window.m_max = parse_number(key, value);
  } else if (key == "E_min") {
    c.window.E_min = parse_number(key, value);
  } else if (key == "E_max") {
    c.window.E_max = parse_number(key, value);
  } else if (key == "resolution") {
    c.resolution = parse_int(key, value);
  } else if (key == "J") {
    c.ensemble_size = parse_int(key, value);
  } else if (key == "delta") {
    c.delta = parse_number(key, value);
  } else if (key == "gamma") {
    c.gamma = parse_number(key, value);
  } else if (key == "n") {
    c.n = parse_int(key, value);
  } else if (key == "force") {
    c.force = parse_number(key, value);
  } else if (key == "sigma_scale") {
    c.sigma_scale = parse_number(key, value);
  } else if (key == "truth_seed") {
    c.truth_seed = parse_seed(key, value);
  } else if (key == "stop_on_discrepancy") {
    c.stop_on_discrepancy = parse_bool(key, value);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

void validate(const ExperimentConfig& c) {
  if (!(c.dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (!(c.t_max > 0.0)) throw ConfigError("t_max", "must be positive");
  if (c.stride < 1) throw ConfigError("stride", "must be at least 1");
  if (c.method == Method::InflationOnly && c.beta != 0.0) {
    throw ConfigError("beta", "inflation_only runs use beta = 0");
  }
  switch (c.experiment) {
    case ExperimentKind::PhasePortrait:
      if (c.resolution < 2) throw ConfigError("resolution", "need at least 2 samples per axis");
      if (!(c.window.m_max > c.window.m_min)) throw ConfigError("m_max", "must exceed m_min");
      if (!(c.window.E_max > c.window.E_min)) throw ConfigError("E_max", "must exceed E_min");
      break;
    case ExperimentKind::VarianceDecay:
      if (c.m0.empty()) throw ConfigError("m0", "need at least one initial mean");
      if (!(c.c0 >= 0.0)) throw ConfigError("c0", "initial variance must be non-negative");
      break;
    case ExperimentKind::Groundwater:
      if (c.ensemble_size < 2) throw ConfigError("J", "ensemble needs at least 2 members");
      if (!(c.delta >= 0.0)) throw ConfigError("delta", "prior scale must be non-negative");
      if (!(c.gamma > 0.0)) throw ConfigError("gamma", "noise level must be positive");
      if (c.n < 1 || (c.n + 1) % 21 != 0) {
        throw ConfigError("n", "n+1 must be a positive multiple of 21 to host the 20x20 observation lattice");
      }
      if (!(c.sigma_scale >= 0.0)) throw ConfigError("sigma_scale", "must be non-negative");
      break;
  }
}

ExperimentConfig parse_config(std::string_view text) {
  const auto pairs = read_pairs(text);
  std::optional<std::string> kind;
  std::optional<std::string> method;
  bool beta_given = false;
  for (const auto& [key, value] : pairs) {
    if (key == "experiment") kind = value;
    if (key == "method") method = value;
    if (key == "beta") beta_given = true;
  }
  if (!kind) throw ConfigError("experiment", "required");
  if (!method) throw ConfigError("method", "required");

  ExperimentConfig c = default_config(parse_kind(*kind));
  for (const auto& [key, value] : pairs) {
    set_field(c, key, value);
  }
  if (c.method == Method::InflationOnly && !beta_given) c.beta = 0.0;
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment = " << to_string(c.experiment) << '\n';
  out << "method = " << to_string(c.method) << '\n';
  out << "alpha = " << format_double(c.alpha) << '\n';
  out << "beta = " << format_double(c.beta) << '\n';
  out << "y = " << format_double(c.y) << '\n';
  out << "dt = " << format_double(c.dt) << '\n';
  out << "t_max = " << format_double(c.t_max) << '\n';
  out << "stride = " << c.stride << '\n';
  out << "seed = " << c.seed << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  out << "m0 = ";
  for (std::size_t i = 0; i < c.m0.size(); ++i) out << (i ? "," : "") << format_double(c.m0[i]);
  out << '\n';
  out << "c0 = " << format_double(c.c0) << '\n';
  out << "m_min = " << format_double(c.window.m_min) << '\n';
  out << "m_max = " << format_double(c.window.m_max) << '\n';
  out << "E_min = " << format_double(c.window.E_min) << '\n';
  out << "E_max = " << format_double(c.window.E_max) << '\n';
  out << "resolution = " << c.resolution << '\n';
  out << "J = " << c.ensemble_size << '\n';
  out << "delta = " << format_double(c.delta) << '\n';
  out << "gamma = " << format_double(c.gamma) << '\n';
  out << "n = " << c.n << '\n';
  out << "force = " << format_double(c.force) << '\n';
  out << "sigma_scale = " << format_double(c.sigma_scale) << '\n';
  out << "truth_seed = " << c.truth_seed << '\n';
  out << "stop_on_discrepancy = " << (c.stop_on_discrepancy ? "true" : "false") << '\n';
  return out.str();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = to_string(c.experiment);
  j["method"] = to_string(c.method);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["effective_alpha"] = c.effective_alpha();
  j["effective_beta"] = c.effective_beta();
  j["y"] = c.y;
  j["dt"] = c.dt;
  j["t_max"] = c.t_max;
  j["stride"] = c.stride;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["m0"] = c.m0;
  j["c0"] = c.c0;
  j["window"] = {{"m_min", c.window.m_min}, {"m_max", c.window.m_max}, {"E_min", c.window.E_min},
                 {"E_max", c.window.E_max}};
  j["resolution"] = c.resolution;
  j["J"] = c.ensemble_size;
  j["delta"] = c.delta;
  j["gamma"] = c.gamma;
  j["n"] = c.n;
  j["force"] = c.force;
  j["sigma_scale"] = c.sigma_scale;
  j["truth_seed"] = c.truth_seed;
  j["stop_on_discrepancy"] = c.stop_on_discrepancy;
  return j;
}

}  // namespace eki
