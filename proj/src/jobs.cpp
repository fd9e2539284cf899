#include "dtc/jobs.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtc/meanfield.hpp"
#include "dtc/quantum.hpp"

namespace dtc {

namespace {

using json = nlohmann::ordered_json;

// Fixed-point match tolerance for report classification. Tight on purpose:
// a state is only tagged trivial/nontrivial when it has genuinely settled.
constexpr double kClassifyTol = 1e-3;

json json_or_infinite(double v) {
  return std::isfinite(v) ? json(v) : json("infinite");
}

json echo_config(const RunConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["omega_T"] = cfg.omega_T;
  j["epsilon"] = cfg.epsilon;
  j["lambda"] = cfg.lambda;
  j["h"] = cfg.h;
  j["gamma"] = cfg.gamma;
  j["Gamma"] = cfg.Gamma;
  j["Gamma_tilde"] = cfg.Gamma_tilde;
  j["n_spins"] = cfg.n_spins;
  j["n_periods"] = cfg.n_periods;
  j["steps_per_period"] = effective_steps_per_period(cfg);
  j["n_max"] = cfg.n_max;
  j["alpha"] = cfg.alpha;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::string lifetime_string(const Lifetime& life) {
  return life.infinite ? std::string("infinite") : std::to_string(life.periods);
}

}  // namespace

DtcReport<double> analyze_record(const RunRecord<double>& rec, const SystemParams<double>& par) {
  DtcReport<double> rep;
  const auto jx = strobe_component(rec.strobe, kJx);
  rep.subharmonic_weight = jx.size() >= 4 ? subharmonic_weight_tail(jx, kAnalysisWindow) : 0.0;
  rep.lifetime = dtc_lifetime(jx);
  rep.transient_dtc = is_transient_dtc(rep.lifetime, par);
  const double T = par.period();
  const double inf = std::numeric_limits<double>::infinity();
  rep.decay_gamma_periods = par.gamma > 0 ? 1.0 / (par.gamma * T) : inf;
  rep.decay_Gamma_periods = par.Gamma > 0 ? 1.0 / (par.Gamma * T) : inf;
  rep.classification = classify_steady_state(rec, par, kClassifyTol);
  return rep;
}

RunArtifacts execute_run(const RunConfig& cfg) {
  validate_run_config(cfg);
  RunArtifacts art;
  art.config = cfg;
  const auto par = params_from(cfg);
  const auto proto = make_protocol(par, cfg.n_periods);
  const int spp = effective_steps_per_period(cfg);

  if (cfg.mode == RunMode::MeanField) {
    auto run = run_floquet(par, proto, make_state(1.0, 0.0, 0.0, 0.0, 0.0), spp, kCsvRecordStride);
    art.rec = std::move(run.rec);
    art.status = run.status;
    art.message = std::move(run.message);
  } else {
    QuantumConfig<double> qc;
    qc.params = par;
    qc.n_max = cfg.n_max;
    qc.alpha = cfg.alpha;
    auto run = propagate_floquet(qc, proto, spp, kCsvRecordStride);
    art.rec = std::move(run.rec);
    art.status = run.status;
    art.message = std::move(run.message);
    art.truncation_warning = run.truncation_warning;
    for (const double e : run.trace_err) art.max_trace_err = std::max(art.max_trace_err, e);
    for (const double p : run.top_fock) art.max_top_fock = std::max(art.max_top_fock, p);
  }
  art.report = analyze_record(art.rec, par);
  return art;
}

void write_run_outputs(const RunArtifacts& art, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto tables = bloch_export(art.rec);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(tables.full.size());
  for (const auto& r : tables.full)
    rows.push_back({format_double(r[0]), format_double(r[1]), format_double(r[2]),
                    format_double(r[3]), format_double(r[4]), format_double(r[5])});
  write_csv(dir / "trajectory.csv", "t,jx,jy,jz,x,p", rows);

  rows.clear();
  rows.reserve(tables.stroboscopic.size());
  for (const auto& r : tables.stroboscopic)
    rows.push_back({std::to_string(static_cast<long>(r[0])), format_double(r[1]),
                    format_double(r[2]), format_double(r[3]), format_double(r[4]),
                    format_double(r[5]), format_double(r[6])});
  write_csv(dir / "stroboscopic.csv", "n,t,jx,jy,jz,x,p", rows);

  const auto par = params_from(art.config);
  const auto& rep = art.report;
  json j;
  j["mode"] = to_string(art.config.mode);
  j["config"] = echo_config(art.config);
  j["subharmonic_weight"] = rep.subharmonic_weight;
  j["lifetime_periods"] =
      rep.lifetime.infinite ? json("infinite") : json(rep.lifetime.periods);
  j["transient_dtc"] = rep.transient_dtc;
  j["classification"] = to_string(rep.classification.tag);
  j["residual"] = rep.classification.residual;
  j["decay_time_periods"]["gamma"] = json_or_infinite(rep.decay_gamma_periods);
  j["decay_time_periods"]["Gamma"] = json_or_infinite(rep.decay_Gamma_periods);
  j["lambda_c"] = critical_coupling(par);
  if (par.h == 0 && par.lambda > 0) {
    const double lc = critical_coupling(par);
    j["mu"] = (lc / par.lambda) * (lc / par.lambda);
    if (const auto att = stable_attractors(par)) {
      json plus = json::array(), minus = json::array();
      for (int i = 0; i < 5; ++i) {
        plus.push_back(att->plus[i]);
        minus.push_back(att->minus[i]);
      }
      j["attractors"] = {{"plus", plus}, {"minus", minus}};
    } else {
      j["attractors"] = nullptr;  // below critical coupling
    }
  } else {
    j["mu"] = nullptr;
    j["attractors"] = nullptr;
  }
  j["truncated"] = art.status != RunStatus::Ok;
  j["status"] = to_string(art.status);
  if (!art.message.empty()) j["message"] = art.message;
  if (art.config.mode == RunMode::Quantum) {
    j["monitors"] = {{"max_trace_error", art.max_trace_err},
                     {"max_top_fock", art.max_top_fock},
                     {"truncation_warning", art.truncation_warning}};
  } else {
    j["monitors"] = json::object();
  }

  std::ofstream report(dir / "report.json", std::ios::trunc);
  if (!report) throw std::runtime_error("cannot write report.json");
  report << j.dump(2) << "\n";

  std::ofstream schema(dir / "report.schema.json", std::ios::trunc);
  if (!schema) throw std::runtime_error("cannot write report.schema.json");
  schema << kReportSchema << "\n";
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("DTC_OUTPUT_DIR"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::path(cfg.output_dir);
}

int job_run(const std::filesystem::path& config_path) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  RunArtifacts art;
  try {
    art = execute_run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
  try {
    write_run_outputs(art, resolve_output_dir(cfg));
  } catch (const std::exception& e) {
    std::cerr << "output failed: " << e.what() << "\n";
    return 1;
  }
  if (art.status != RunStatus::Ok) {
    std::cerr << "run aborted (" << to_string(art.status) << "): " << art.message
              << "\npartial results written to " << resolve_output_dir(cfg).string() << "\n";
    return 1;
  }
  std::cout << "weight " << format_double(art.report.subharmonic_weight) << ", lifetime "
            << lifetime_string(art.report.lifetime) << ", classification "
            << to_string(art.report.classification.tag) << "; results in "
            << resolve_output_dir(cfg).string() << "\n";
  return 0;
}

int job_validate(const std::filesystem::path& config_path) {
  try {
    (void)load_run_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "ok\n";
  return 0;
}

namespace {

struct SweepRow {
  std::vector<double> values;
  std::string weight, lifetime, classification, status;
};

SweepRow run_cell(const RunConfig& base,
                  const std::vector<std::pair<std::string, double>>& cell) {
  SweepRow row;
  for (const auto& [_, v] : cell) row.values.push_back(v);
  try {
    const RunConfig cfg = apply_cell(base, cell);
    validate_run_config(cfg);
    const RunArtifacts art = execute_run(cfg);
    row.weight = format_double(art.report.subharmonic_weight);
    row.lifetime = lifetime_string(art.report.lifetime);
    row.classification = to_string(art.report.classification.tag);
    row.status = to_string(art.status);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == ',' || c == '\n') c = ';';
    row.weight = row.lifetime = row.classification = "";
    row.status = "error: " + msg;
  }
  return row;
}

}  // namespace

int job_sweep(const std::filesystem::path& config_path, const std::filesystem::path& grid_path,
              int jobs) {
  RunConfig base;
  SweepGrid grid;
  try {
    base = load_run_config(config_path);
    grid = load_sweep_grid(grid_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const auto cells = expand_grid(grid);
  std::vector<SweepRow> results(cells.size());
  if (!cells.empty()) {
    int n_workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    n_workers = std::min<int>(n_workers, static_cast<int>(cells.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
        results[i] = run_cell(base, cells[i]);
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers - 1);
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  std::string header;
  for (const auto& ax : grid.axes)
    for (const auto& key : ax.keys) header += key + ",";
  header += "subharmonic_weight,lifetime_periods,classification,status";

  std::vector<std::vector<std::string>> rows;
  rows.reserve(results.size());
  for (const auto& r : results) {
    std::vector<std::string> row;
    for (const double v : r.values) row.push_back(format_double(v));
    row.push_back(r.weight);
    row.push_back(r.lifetime);
    row.push_back(r.classification);
    row.push_back(r.status);
    rows.push_back(std::move(row));
  }
  const auto dir = resolve_output_dir(base);
  try {
    std::filesystem::create_directories(dir);
    write_csv(dir / "sweep.csv", header, rows);
  } catch (const std::exception& e) {
    std::cerr << "output failed: " << e.what() << "\n";
    return 1;
  }
  std::cout << rows.size() << " cells -> " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace dtc
