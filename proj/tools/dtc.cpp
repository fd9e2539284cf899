#include <string>

#include <CLI11.hpp>

#include "dtc/jobs.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Floquet dynamics of N qubits in a lossy cavity: mean-field and exact "
               "Lindblad propagation with time-crystal diagnostics"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, sweep_grid, validate_config;
  int jobs = 0;

  auto* run = app.add_subcommand(
      "run", "integrate one configuration; writes trajectory.csv, stroboscopic.csv, report.json");
  run->add_option("config", run_config, "run configuration file")->required();

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid; writes sweep.csv");
  sweep->add_option("config", sweep_config, "base configuration file")->required();
  sweep->add_option("--grid", sweep_grid, "grid file (axes over h, gamma, Gamma, Gamma_tilde, epsilon)")
      ->required();
  sweep->add_option("--jobs", jobs, "parallel cells (default: all cores)");

  auto* validate = app.add_subcommand("validate", "check a configuration file and exit");
  validate->add_option("config", validate_config, "configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a config error
  }

  if (run->parsed()) return dtc::job_run(run_config);
  if (sweep->parsed()) return dtc::job_sweep(sweep_config, sweep_grid, jobs);
  return dtc::job_validate(validate_config);
}
