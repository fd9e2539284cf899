#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dtc/diagnostics.hpp"
#include "dtc/integrator.hpp"
#include "dtc/params.hpp"
#include "dtc/state.hpp"

namespace dtc {

// Semiclassical flow for the scaled observables. The cavity drives the spin
// through x and is driven back through jx; collective damping Gamma contracts
// the Bloch vector toward the south pole, dephasing Gamma_tilde shrinks the
// transverse components, and the sphere |j| = 1 is invariant when
// Gamma_tilde = 0.
template <typename Scalar>
State5<Scalar> mean_field_rhs(const State5<Scalar>& s, const SystemParams<Scalar>& par,
                              Scalar lambda_now) {
  const Scalar jx = s[kJx], jy = s[kJy], jz = s[kJz], x = s[kX], p = s[kP];
  const Scalar cpl = lambda_now * std::sqrt(Scalar(2) * par.omega);
  State5<Scalar> d;
  d[kJx] = -par.omega0 * jy - par.h * jy * jz + (par.Gamma / 2) * jx * jz - par.Gamma_tilde * jx;
  d[kJy] = par.omega0 * jx - 2 * cpl * x * jz + par.h * jx * jz + (par.Gamma / 2) * jy * jz -
           par.Gamma_tilde * jy;
  d[kJz] = 2 * cpl * x * jy + (par.Gamma / 2) * (jz * jz - 1);
  d[kX] = p - (par.gamma / 2) * x;
  d[kP] = -par.omega * par.omega * x - (par.gamma / 2) * p - cpl * jx;
  return d;
}

// Symmetry-broken fixed-point pair of the drive-on flow at h = 0:
// (jx, jy, jz) = (±sqrt(1-mu^2), 0, -mu) with mu = (lambda_c/lambda)^2, and
// the cavity displaced opposite to jx. Exact for Gamma = Gamma_tilde = 0 at
// any gamma; finite spin rates shift them at O(Gamma).
template <typename Scalar = double>
struct Attractors {
  State5<Scalar> plus;   // jx > 0 branch
  State5<Scalar> minus;  // jx < 0 branch
  Scalar mu;
  Scalar lambda_c;
};

template <typename Scalar>
std::optional<Attractors<Scalar>> stable_attractors(const SystemParams<Scalar>& par) {
  if (par.h != Scalar(0)) throw std::invalid_argument("attractor formulas require h = 0");
  if (!(par.lambda > Scalar(0))) throw std::invalid_argument("attractors require lambda > 0");
  Attractors<Scalar> att;
  att.lambda_c = critical_coupling(par);
  att.mu = (att.lambda_c / par.lambda) * (att.lambda_c / par.lambda);
  if (att.mu > Scalar(1)) return std::nullopt;  // below critical: only the poles survive
  const Scalar r = std::sqrt(Scalar(1) - att.mu * att.mu);
  const Scalar q = par.lambda * std::sqrt(Scalar(2) * par.omega * (Scalar(1) - att.mu * att.mu)) /
                   (par.omega * par.omega + par.gamma * par.gamma / Scalar(4));
  att.plus = make_state<Scalar>(r, 0, -att.mu, -q, -(par.gamma / 2) * q);
  att.minus = make_state<Scalar>(-r, 0, -att.mu, q, (par.gamma / 2) * q);

  // Self-check against the undamped-spin flow, where the pair is exact.
  SystemParams<Scalar> clean = par;
  clean.Gamma = clean.Gamma_tilde = Scalar(0);
  for (const auto* fp : {&att.plus, &att.minus}) {
    const Scalar res = mean_field_rhs(*fp, clean, par.lambda).cwiseAbs().maxCoeff();
    if (!(res < Scalar(1e-9))) throw std::logic_error("attractor residual exceeds 1e-9");
  }
  return att;
}

template <typename Scalar = double>
struct MfRun {
  RunRecord<Scalar> rec;
  RunStatus status = RunStatus::Ok;
  std::string message;
};

// Integrates the flow across n_periods of the square-wave drive. The coupling
// is constant on each half-period, so each half is integrated with a frozen
// lambda and T/2 always lands on a step boundary (steps_per_period even).
// States are recorded every record_stride steps plus at every t = nT.
// A divergence monitor stops the run and returns the partial record.
template <typename Scalar>
MfRun<Scalar> run_floquet(const SystemParams<Scalar>& par, const DriveProtocol<Scalar>& proto,
                          const State5<Scalar>& initial, int steps_per_period,
                          int record_stride = 1) {
  if (steps_per_period < 2 || steps_per_period % 2 != 0)
    throw std::invalid_argument("steps_per_period must be even and >= 2");
  if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
  if (!initial.allFinite()) throw std::invalid_argument("initial state must be finite");

  const Scalar T = proto.period;
  const Scalar dt = T / Scalar(steps_per_period);
  const int half_steps = steps_per_period / 2;

  MfRun<Scalar> out;
  out.rec.strobe.period = T;
  out.rec.times.reserve(static_cast<std::size_t>(proto.n_periods) * steps_per_period / record_stride + 2);
  out.rec.series.reserve(out.rec.times.capacity());
  out.rec.strobe.samples.reserve(static_cast<std::size_t>(proto.n_periods) + 1);

  State5<Scalar> s = initial;
  out.rec.times.push_back(0);
  out.rec.series.push_back(s);
  out.rec.strobe.samples.push_back(s);

  long step = 0;
  for (int n = 0; n < proto.n_periods; ++n) {
    for (int half = 0; half < 2; ++half) {
      const Scalar lam = half == 0 ? proto.lambda_on : Scalar(0);
      auto rhs = [&par, lam](const State5<Scalar>& y, Scalar) {
        return mean_field_rhs(y, par, lam);
      };
      const Scalar t0 = (Scalar(n) + Scalar(half) / Scalar(2)) * T;
      for (int k = 0; k < half_steps; ++k) {
        s = rk4_step(s, rhs, t0 + Scalar(k) * dt, dt);
        ++step;
        const Scalar t = t0 + Scalar(k + 1) * dt;
        if (!s.allFinite() || s.cwiseAbs().maxCoeff() > Scalar(1e6)) {
          std::ostringstream msg;
          msg << "state diverged at step " << step << " (t = " << double(t)
              << "): step size too large for this regime";
          out.status = RunStatus::BlowUp;
          out.message = msg.str();
          return out;
        }
        if (step % record_stride == 0) {
          out.rec.times.push_back(t);
          out.rec.series.push_back(s);
        }
      }
    }
    out.rec.strobe.samples.push_back(s);
  }
  return out;
}

// Trailing stroboscopic samples examined for persistent period doubling.
inline constexpr std::size_t kOscillationWindow = 50;

// Nearest known fixed point within tol (Euclidean distance on the 5-vector).
// Candidates are the two poles plus, at h = 0 above critical coupling, the
// symmetry-broken pair. residual reports max |rhs| under the drive-on flow.
template <typename Scalar>
SteadyStateClass<Scalar> classify_steady_state(const State5<Scalar>& final_state,
                                               const SystemParams<Scalar>& par, Scalar tol) {
  if (!(tol > Scalar(0))) throw std::invalid_argument("tol must be positive");
  SteadyStateClass<Scalar> out;
  out.residual = mean_field_rhs(final_state, par, par.lambda).cwiseAbs().maxCoeff();

  std::vector<std::pair<State5<Scalar>, SteadyTag>> candidates = {
      {make_state<Scalar>(0, 0, 1, 0, 0), SteadyTag::TrivialUp},
      {make_state<Scalar>(0, 0, -1, 0, 0), SteadyTag::TrivialDown},
  };
  if (par.h == Scalar(0) && par.lambda > Scalar(0)) {
    if (const auto att = stable_attractors(par)) {
      candidates.emplace_back(att->plus, SteadyTag::NontrivialPlus);
      candidates.emplace_back(att->minus, SteadyTag::NontrivialMinus);
    }
  }

  Scalar best = tol;
  for (const auto& [point, tag] : candidates) {
    const Scalar dist = (final_state - point).norm();
    if (dist < best) {
      best = dist;
      out.tag = tag;
    }
  }
  return out;
}

// Record-aware overload: when no fixed point matches, tag persistent
// period doubling (trailing stroboscopic jx alternating with amplitude > tol)
// as Oscillating.
template <typename Scalar>
SteadyStateClass<Scalar> classify_steady_state(const RunRecord<Scalar>& rec,
                                               const SystemParams<Scalar>& par, Scalar tol) {
  if (rec.strobe.samples.empty()) throw std::invalid_argument("record has no stroboscopic samples");
  auto out = classify_steady_state(rec.strobe.samples.back(), par, tol);
  if (out.tag != SteadyTag::Unclassified) return out;

  const auto& samples = rec.strobe.samples;
  const std::size_t n = samples.size();
  const std::size_t take = std::min(kOscillationWindow, n);
  if (take < 2) return out;
  bool oscillating = true;
  for (std::size_t i = n - take; i < n; ++i) {
    const Scalar jx = samples[i][kJx];
    if (!(std::abs(jx) > tol) || (i > n - take && jx * samples[i - 1][kJx] >= Scalar(0))) {
      oscillating = false;
      break;
    }
  }
  if (oscillating) out.tag = SteadyTag::Oscillating;
  return out;
}

}  // namespace dtc
