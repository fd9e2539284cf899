#include "dtc/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace dtc {

namespace {

std::string trim(const std::string& s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << what;
  throw ConfigError(msg.str());
}

double parse_double_or_fail(const std::string& tok, const std::string& source, int line) {
  double v = 0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail(source, line, "expected a number, got '" + tok + "'");
  return v;
}

int parse_int_or_fail(const std::string& tok, const std::string& source, int line) {
  int v = 0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail(source, line, "expected an integer, got '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

const std::set<std::string>& sweepable_keys() {
  static const std::set<std::string> keys = {"h", "gamma", "Gamma", "Gamma_tilde", "epsilon"};
  return keys;
}

}  // namespace

int effective_steps_per_period(const RunConfig& cfg) {
  if (cfg.steps_per_period > 0) return cfg.steps_per_period;
  return cfg.mode == RunMode::MeanField ? kDefaultStepsMeanField : kDefaultStepsQuantum;
}

SystemParams<double> params_from(const RunConfig& cfg) {
  return make_params(cfg.omega_T, cfg.epsilon, cfg.lambda, cfg.h, cfg.gamma, cfg.Gamma,
                     cfg.Gamma_tilde, cfg.n_spins);
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  bool mode_seen = false;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(source, line_no, "missing key before '='");
    if (value.empty()) fail(source, line_no, "missing value for '" + key + "'");
    if (!seen.insert(key).second) fail(source, line_no, "duplicate key '" + key + "'");

    if (key == "mode") {
      if (value == "meanfield") cfg.mode = RunMode::MeanField;
      else if (value == "quantum") cfg.mode = RunMode::Quantum;
      else fail(source, line_no, "mode must be 'meanfield' or 'quantum', got '" + value + "'");
      mode_seen = true;
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "omega_T") {
      cfg.omega_T = parse_double_or_fail(value, source, line_no);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double_or_fail(value, source, line_no);
    } else if (key == "lambda") {
      cfg.lambda = parse_double_or_fail(value, source, line_no);
    } else if (key == "h") {
      cfg.h = parse_double_or_fail(value, source, line_no);
    } else if (key == "gamma") {
      cfg.gamma = parse_double_or_fail(value, source, line_no);
    } else if (key == "Gamma") {
      cfg.Gamma = parse_double_or_fail(value, source, line_no);
    } else if (key == "Gamma_tilde") {
      cfg.Gamma_tilde = parse_double_or_fail(value, source, line_no);
    } else if (key == "alpha") {
      cfg.alpha = parse_double_or_fail(value, source, line_no);
    } else if (key == "n_spins") {
      cfg.n_spins = parse_int_or_fail(value, source, line_no);
    } else if (key == "n_periods") {
      cfg.n_periods = parse_int_or_fail(value, source, line_no);
    } else if (key == "steps_per_period") {
      cfg.steps_per_period = parse_int_or_fail(value, source, line_no);
    } else if (key == "n_max") {
      cfg.n_max = parse_int_or_fail(value, source, line_no);
    } else {
      fail(source, line_no, "unknown key '" + key + "'");
    }
  }
  if (!mode_seen) fail(source, line_no + 1, "missing required key 'mode'");
  try {
    validate_run_config(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_run_config(in, path.filename().string());
}

void validate_run_config(const RunConfig& cfg) {
  try {
    (void)params_from(cfg);  // range checks on the physical parameters
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const double v : {cfg.omega_T, cfg.epsilon, cfg.lambda, cfg.h, cfg.gamma, cfg.Gamma,
                         cfg.Gamma_tilde, cfg.alpha}) {
    if (!std::isfinite(v)) throw ConfigError("parameters must be finite");
  }
  if (cfg.n_periods < 1) throw ConfigError("n_periods must be >= 1");
  if (cfg.steps_per_period < 0 ||
      (cfg.steps_per_period > 0 && cfg.steps_per_period % 2 != 0))
    throw ConfigError("steps_per_period must be even (or 0 for the mode default)");
  if (cfg.n_max < 1) throw ConfigError("n_max must be >= 1");
  if (cfg.mode == RunMode::Quantum && (cfg.n_spins < 1 || cfg.n_spins > 6))
    throw ConfigError("quantum mode supports n_spins in [1, 6]");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::size_t SweepGrid::n_cells() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& ax : axes) n *= ax.values.size();
  return n;
}

SweepGrid parse_sweep_grid(std::istream& in, const std::string& source) {
  SweepGrid grid;
  std::set<std::string> used;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source, line_no, "expected 'keys = values'");
    SweepAxis axis;
    for (const auto& raw : split(trim(line.substr(0, eq)), ',')) {
      const std::string key = trim(raw);
      if (!sweepable_keys().contains(key))
        fail(source, line_no, "'" + key + "' is not sweepable (allowed: h, gamma, Gamma, Gamma_tilde, epsilon)");
      if (!used.insert(key).second) fail(source, line_no, "key '" + key + "' appears twice in the grid");
      axis.keys.push_back(key);
    }
    for (const auto& group : split_ws(trim(line.substr(eq + 1)))) {
      const auto parts = split(group, ',');
      if (parts.size() != axis.keys.size())
        fail(source, line_no, "value group '" + group + "' does not match the " +
                                  std::to_string(axis.keys.size()) + " keys of this axis");
      std::vector<double> vals;
      for (const auto& p : parts) vals.push_back(parse_double_or_fail(trim(p), source, line_no));
      axis.values.push_back(std::move(vals));
    }
    if (axis.values.empty()) fail(source, line_no, "axis has no values");
    grid.axes.push_back(std::move(axis));
  }
  if (grid.n_cells() > kMaxSweepCells)
    throw ConfigError(source + ": grid has " + std::to_string(grid.n_cells()) +
                      " cells, limit is " + std::to_string(kMaxSweepCells));
  return grid;
}

SweepGrid load_sweep_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file: " + path.string());
  return parse_sweep_grid(in, path.filename().string());
}

std::vector<std::vector<std::pair<std::string, double>>> expand_grid(const SweepGrid& grid) {
  std::vector<std::vector<std::pair<std::string, double>>> cells;
  if (grid.axes.empty()) return cells;
  cells.reserve(grid.n_cells());
  std::vector<std::size_t> idx(grid.axes.size(), 0);
  while (true) {
    std::vector<std::pair<std::string, double>> cell;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      const auto& ax = grid.axes[a];
      const auto& vals = ax.values[idx[a]];
      for (std::size_t k = 0; k < ax.keys.size(); ++k) cell.emplace_back(ax.keys[k], vals[k]);
    }
    cells.push_back(std::move(cell));
    // odometer increment, last axis fastest
    std::size_t a = grid.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < grid.axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return cells;
    }
  }
}

RunConfig apply_cell(RunConfig base, const std::vector<std::pair<std::string, double>>& cell) {
  for (const auto& [key, value] : cell) {
    if (key == "h") base.h = value;
    else if (key == "gamma") base.gamma = value;
    else if (key == "Gamma") base.Gamma = value;
    else if (key == "Gamma_tilde") base.Gamma_tilde = value;
    else if (key == "epsilon") base.epsilon = value;
    else throw ConfigError("grid key '" + key + "' is not sweepable");
  }
  return base;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
}

const char* const kReportSchema = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "dtc run report",
  "type": "object",
  "required": ["mode", "config", "subharmonic_weight", "lifetime_periods", "transient_dtc",
               "classification", "residual", "decay_time_periods", "lambda_c", "mu",
               "attractors", "truncated", "status", "monitors"],
  "properties": {
    "mode": {"type": "string", "enum": ["meanfield", "quantum"]},
    "config": {"type": "object"},
    "subharmonic_weight": {"type": "number", "minimum": 0, "maximum": 1},
    "lifetime_periods": {"type": ["integer", "string"]},
    "transient_dtc": {"type": "boolean"},
    "classification": {
      "type": "string",
      "enum": ["trivial_up", "trivial_down", "nontrivial_plus", "nontrivial_minus",
               "oscillating", "unclassified"]
    },
    "residual": {"type": "number"},
    "decay_time_periods": {
      "type": "object",
      "required": ["gamma", "Gamma"],
      "properties": {
        "gamma": {"type": ["number", "string"]},
        "Gamma": {"type": ["number", "string"]}
      }
    },
    "lambda_c": {"type": "number"},
    "mu": {"type": ["number", "null"]},
    "attractors": {
      "type": ["object", "null"],
      "required": ["plus", "minus"],
      "properties": {
        "plus": {"type": "array", "items": {"type": "number"}, "minItems": 5, "maxItems": 5},
        "minus": {"type": "array", "items": {"type": "number"}, "minItems": 5, "maxItems": 5}
      }
    },
    "truncated": {"type": "boolean"},
    "status": {"type": "string"},
    "message": {"type": "string"},
    "monitors": {"type": "object"}
  }
})";

}  // namespace dtc
