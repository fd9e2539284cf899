#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtc/params.hpp"

namespace dtc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { MeanField, Quantum };

inline const char* to_string(RunMode m) {
  return m == RunMode::MeanField ? "meanfield" : "quantum";
}

// One flat key = value file describes a run; keys are exactly these field
// names. steps_per_period = 0 picks the per-mode default (1000 mean field,
// 2000 quantum). Runs are seedless and fully deterministic.
struct RunConfig {
  RunMode mode = RunMode::MeanField;
  double omega_T = 1.0;
  double epsilon = 0.0;
  double lambda = 1.0;
  double h = 0.0;
  double gamma = 0.0;
  double Gamma = 0.0;
  double Gamma_tilde = 0.0;
  int n_spins = 2;
  int n_periods = 100;
  int steps_per_period = 0;
  int n_max = 16;
  double alpha = 0.01;
  std::string output_dir = ".";
};

inline constexpr int kDefaultStepsMeanField = 1000;
inline constexpr int kDefaultStepsQuantum = 2000;

// Steps between trajectory.csv rows; stroboscopic samples are always kept.
inline constexpr int kCsvRecordStride = 10;

int effective_steps_per_period(const RunConfig& cfg);
SystemParams<double> params_from(const RunConfig& cfg);

// Parses `key = value` lines ('#' comments, blank lines allowed). Unknown or
// duplicate keys, malformed values, and semantic violations raise ConfigError
// with "source:line:" prefixes.
RunConfig parse_run_config(std::istream& in, const std::string& source);
RunConfig load_run_config(const std::filesystem::path& path);
void validate_run_config(const RunConfig& cfg);

// Sweep grid: each line `key = v1 v2 ...` is one axis; `k1,k2 = a,b c,d`
// varies keys in lockstep. Axes combine as a cartesian product, first axis
// slowest. Only {h, gamma, Gamma, Gamma_tilde, epsilon} may vary.
struct SweepAxis {
  std::vector<std::string> keys;
  std::vector<std::vector<double>> values;  // values[i] matches keys
};

struct SweepGrid {
  std::vector<SweepAxis> axes;
  std::size_t n_cells() const;
};

inline constexpr std::size_t kMaxSweepCells = 10000;

SweepGrid parse_sweep_grid(std::istream& in, const std::string& source);
SweepGrid load_sweep_grid(const std::filesystem::path& path);

// One parameter assignment per grid cell, in grid order.
std::vector<std::vector<std::pair<std::string, double>>> expand_grid(const SweepGrid& grid);
RunConfig apply_cell(RunConfig base, const std::vector<std::pair<std::string, double>>& cell);

// Shortest decimal string that round-trips to the same double; CSV and JSON
// numbers use this so re-runs are byte-identical.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows);

// JSON schema for report.json, published next to every report.
extern const char* const kReportSchema;

}  // namespace dtc
