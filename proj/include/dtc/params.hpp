#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dtc {

// Model constants. Frequencies are tied to the drive: omega = (1-eps)*omega_T,
// omega0 = (1+eps)*omega_T, so eps detunes cavity and spin symmetrically about
// the drive frequency. All rates are non-negative; |eps| < 1 keeps both
// frequencies positive.
template <typename Scalar = double>
struct SystemParams {
  Scalar omega_T;      // drive angular frequency, T = 2*pi/omega_T
  Scalar epsilon;      // drive imperfection
  Scalar omega;        // cavity frequency, (1-epsilon)*omega_T
  Scalar omega0;       // spin splitting, (1+epsilon)*omega_T
  Scalar lambda;       // spin-cavity coupling while the drive is on
  Scalar h;            // all-to-all spin coupling
  Scalar gamma;        // cavity damping rate
  Scalar Gamma;        // collective spin damping rate
  Scalar Gamma_tilde;  // collective spin dephasing rate
  int n_spins;         // qubit count, used by the quantum regime only

  Scalar period() const { return Scalar(2) * std::numbers::pi_v<Scalar> / omega_T; }
};

template <typename Scalar = double>
SystemParams<Scalar> make_params(Scalar omega_T, Scalar epsilon, Scalar lambda,
                                 Scalar h, Scalar gamma, Scalar Gamma,
                                 Scalar Gamma_tilde, int n_spins = 2) {
  if (!(omega_T > Scalar(0))) throw std::invalid_argument("omega_T must be positive");
  if (!(std::abs(epsilon) < Scalar(1))) throw std::invalid_argument("|epsilon| must be < 1");
  if (lambda < Scalar(0)) throw std::invalid_argument("lambda must be non-negative");
  if (gamma < Scalar(0) || Gamma < Scalar(0) || Gamma_tilde < Scalar(0))
    throw std::invalid_argument("damping rates must be non-negative");
  if (n_spins < 1) throw std::invalid_argument("n_spins must be >= 1");
  SystemParams<Scalar> p;
  p.omega_T = omega_T;
  p.epsilon = epsilon;
  p.omega = (Scalar(1) - epsilon) * omega_T;
  p.omega0 = (Scalar(1) + epsilon) * omega_T;
  p.lambda = lambda;
  p.h = h;
  p.gamma = gamma;
  p.Gamma = Gamma;
  p.Gamma_tilde = Gamma_tilde;
  p.n_spins = n_spins;
  return p;
}

// Square-wave coupling schedule: lambda_on during [nT, nT + T/2), zero during
// [nT + T/2, (n+1)T). Half-open on both pieces, so t = T/2 is already off.
template <typename Scalar = double>
struct DriveProtocol {
  Scalar period;
  Scalar lambda_on;
  int n_periods;
};

template <typename Scalar>
DriveProtocol<Scalar> make_protocol(const SystemParams<Scalar>& par, int n_periods) {
  if (n_periods < 1) throw std::invalid_argument("n_periods must be >= 1");
  return {par.period(), par.lambda, n_periods};
}

template <typename Scalar>
Scalar lambda_at(Scalar t, const DriveProtocol<Scalar>& proto) {
  if (t < Scalar(0)) throw std::invalid_argument("lambda_at requires t >= 0");
  const Scalar tm = std::fmod(t, proto.period);
  return tm < proto.period / Scalar(2) ? proto.lambda_on : Scalar(0);
}

// Coupling above which the undriven flow acquires a symmetry-broken attractor
// pair. Cavity damping enters through omega^2 + gamma^2/4.
template <typename Scalar>
Scalar critical_coupling(const SystemParams<Scalar>& par) {
  if (!(par.omega > Scalar(0))) throw std::invalid_argument("critical_coupling requires omega > 0");
  return std::sqrt((par.omega0 / par.omega) *
                   (par.omega * par.omega + par.gamma * par.gamma / Scalar(4))) / Scalar(2);
}

// Mid-run monitor failure (blow-up, truncation, trace drift). Carries the step
// index and simulation time where the monitor tripped.
struct MonitorError : std::runtime_error {
  MonitorError(const std::string& what, long step_, double t_)
      : std::runtime_error(what), step(step_), t(t_) {}
  long step;
  double t;
};

}  // namespace dtc
