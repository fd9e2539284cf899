#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtc/params.hpp"
#include "dtc/state.hpp"

namespace dtc {

// Samples taken exactly at t = nT (end of each period), n = 0..n_periods.
template <typename Scalar = double>
struct StroboscopicRecord {
  Scalar period = 0;
  std::vector<State5<Scalar>> samples;
};

// Full trajectory (possibly strided) plus the stroboscopic samples, which are
// recorded at every period boundary regardless of stride.
template <typename Scalar = double>
struct RunRecord {
  std::vector<Scalar> times;
  std::vector<State5<Scalar>> series;
  StroboscopicRecord<Scalar> strobe;
};

enum class RunStatus { Ok, BlowUp, TruncationAbort, TraceAbort };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::BlowUp: return "blow_up";
    case RunStatus::TruncationAbort: return "truncation_abort";
    case RunStatus::TraceAbort: return "trace_abort";
  }
  return "unknown";
}

template <typename Scalar>
std::vector<Scalar> strobe_component(const StroboscopicRecord<Scalar>& rec, int idx) {
  std::vector<Scalar> out;
  out.reserve(rec.samples.size());
  for (const auto& s : rec.samples) out.push_back(s[idx]);
  return out;
}

// Relative weight of the period-doubled response in a stroboscopic series:
// |sum_n (-1)^n s_n| / sum_n |s_n|. Equals 1 for perfect sign alternation and
// ~0 for a period-1 signal. A series that has already decayed below 1e-12
// everywhere carries no subharmonic content.
template <typename Scalar>
Scalar subharmonic_weight(std::span<const Scalar> samples) {
  if (samples.size() < 4) throw std::invalid_argument("subharmonic_weight needs >= 4 samples");
  Scalar alt = 0, norm = 0;
  Scalar sign = 1;
  for (const Scalar v : samples) {
    alt += sign * v;
    norm += std::abs(v);
    sign = -sign;
  }
  if (norm < Scalar(1e-12) * Scalar(samples.size())) return 0;
  return std::abs(alt) / norm;
}

template <typename Scalar>
Scalar subharmonic_weight(const std::vector<Scalar>& samples) {
  return subharmonic_weight(std::span<const Scalar>(samples));
}

// Trailing-window convenience: analyze the last `window` samples (all of them
// if fewer are available).
template <typename Scalar>
Scalar subharmonic_weight_tail(const std::vector<Scalar>& samples, std::size_t window) {
  const std::size_t n = samples.size();
  const std::size_t take = std::min(window, n);
  return subharmonic_weight(std::span<const Scalar>(samples.data() + (n - take), take));
}

// Amplitude floor for lifetime scans. Calibrated between the integrator noise
// floor (~1e-9) and the smallest amplitude a decaying subharmonic tail still
// resolves cleanly before sign flips become accidental.
inline constexpr double kLifetimeThreshold = 0.005;

// Periods survived by coherent period-doubling, counted from the start of the
// series: the largest n such that every m <= n has |s(mT)| > threshold and
// sign(s(mT)) = -sign(s((m-1)T)). periods = -1 when even s(0) fails.
struct Lifetime {
  long periods = -1;
  bool infinite = false;
};

template <typename Scalar>
Lifetime dtc_lifetime(std::span<const Scalar> samples, Scalar threshold = Scalar(kLifetimeThreshold)) {
  if (samples.empty()) throw std::invalid_argument("dtc_lifetime needs >= 1 sample");
  if (!(threshold > Scalar(0))) throw std::invalid_argument("threshold must be positive");
  Lifetime life;
  for (std::size_t m = 0; m < samples.size(); ++m) {
    if (!(std::abs(samples[m]) > threshold)) return life;
    if (m > 0 && !(samples[m] * samples[m - 1] < Scalar(0))) return life;
    life.periods = static_cast<long>(m);
  }
  life.infinite = true;  // alternation held through the last available sample
  return life;
}

template <typename Scalar>
Lifetime dtc_lifetime(const std::vector<Scalar>& samples, Scalar threshold = Scalar(kLifetimeThreshold)) {
  return dtc_lifetime(std::span<const Scalar>(samples), threshold);
}

// Dissipative horizon: a finite-lifetime signal is a transient crystal only
// if it outlives the slowest damping channel by this factor.
inline constexpr double kTransientFactor = 3.0;

template <typename Scalar>
Scalar slowest_decay_time(const SystemParams<Scalar>& par) {
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Scalar tg = par.gamma > Scalar(0) ? Scalar(1) / par.gamma : inf;
  const Scalar tG = par.Gamma > Scalar(0) ? Scalar(1) / par.Gamma : inf;
  return std::max(tg, tG);
}

template <typename Scalar>
bool is_transient_dtc(const Lifetime& life, const SystemParams<Scalar>& par) {
  const Scalar horizon = Scalar(kTransientFactor) * slowest_decay_time(par);
  if (!std::isfinite(horizon)) return false;  // undamped: nothing to outlive
  if (life.infinite) return true;
  if (life.periods < 0) return false;
  return Scalar(life.periods) * par.period() > horizon;
}

// Flat tables ready for CSV export: stroboscopic rows (n, t, jx, jy, jz, x, p)
// and full-trajectory rows (t, jx, jy, jz, x, p).
template <typename Scalar = double>
struct BlochTables {
  std::vector<std::array<Scalar, 7>> stroboscopic;
  std::vector<std::array<Scalar, 6>> full;
};

template <typename Scalar>
BlochTables<Scalar> bloch_export(const RunRecord<Scalar>& rec) {
  BlochTables<Scalar> tab;
  tab.stroboscopic.reserve(rec.strobe.samples.size());
  for (std::size_t n = 0; n < rec.strobe.samples.size(); ++n) {
    const auto& s = rec.strobe.samples[n];
    tab.stroboscopic.push_back({Scalar(n), Scalar(n) * rec.strobe.period,
                                s[kJx], s[kJy], s[kJz], s[kX], s[kP]});
  }
  tab.full.reserve(rec.series.size());
  for (std::size_t i = 0; i < rec.series.size(); ++i) {
    const auto& s = rec.series[i];
    tab.full.push_back({rec.times[i], s[kJx], s[kJy], s[kJz], s[kX], s[kP]});
  }
  return tab;
}

// Steady-state tags: trivial poles (jx=jy=0, jz=±1), the symmetry-broken
// attractor pair (sign of jx), persistent stroboscopic alternation, or none
// of the above. residual is max |rhs| at the final state under the drive-on
// coupling, so fixed points of the on-flow report ~0.
enum class SteadyTag { TrivialUp, TrivialDown, NontrivialPlus, NontrivialMinus, Oscillating, Unclassified };

inline const char* to_string(SteadyTag c) {
  switch (c) {
    case SteadyTag::TrivialUp: return "trivial_up";
    case SteadyTag::TrivialDown: return "trivial_down";
    case SteadyTag::NontrivialPlus: return "nontrivial_plus";
    case SteadyTag::NontrivialMinus: return "nontrivial_minus";
    case SteadyTag::Oscillating: return "oscillating";
    case SteadyTag::Unclassified: return "unclassified";
  }
  return "unknown";
}

template <typename Scalar = double>
struct SteadyStateClass {
  SteadyTag tag = SteadyTag::Unclassified;
  Scalar residual = 0;
};

// Number of trailing stroboscopic samples analyzed for the summary report.
inline constexpr std::size_t kAnalysisWindow = 100;

template <typename Scalar = double>
struct DtcReport {
  Scalar subharmonic_weight = 0;
  Lifetime lifetime;
  bool transient_dtc = false;
  Scalar decay_gamma_periods = 0;  // 1/(gamma*T), inf when undamped
  Scalar decay_Gamma_periods = 0;
  SteadyStateClass<Scalar> classification;
};

}  // namespace dtc
