#pragma once

#include <filesystem>
#include <string>

#include "dtc/diagnostics.hpp"
#include "dtc/io.hpp"

namespace dtc {

// Everything a finished (or aborted) run produces, ready for the writers.
struct RunArtifacts {
  RunConfig config;
  RunRecord<double> rec;
  DtcReport<double> report;
  RunStatus status = RunStatus::Ok;
  std::string message;
  // Quantum monitor summaries; zero for mean-field runs.
  double max_trace_err = 0;
  double max_top_fock = 0;
  bool truncation_warning = false;
};

RunArtifacts execute_run(const RunConfig& cfg);
DtcReport<double> analyze_record(const RunRecord<double>& rec, const SystemParams<double>& par);

// Writes trajectory.csv, stroboscopic.csv, report.json, and
// report.schema.json into dir (created if missing).
void write_run_outputs(const RunArtifacts& art, const std::filesystem::path& dir);

// Entry points behind the CLI verbs; return process exit codes:
// 0 ok, 1 runtime/monitor failure, 2 config error.
int job_run(const std::filesystem::path& config_path);
int job_sweep(const std::filesystem::path& config_path, const std::filesystem::path& grid_path,
              int jobs);
int job_validate(const std::filesystem::path& config_path);

// DTC_OUTPUT_DIR overrides the config's output_dir when set.
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

}  // namespace dtc
