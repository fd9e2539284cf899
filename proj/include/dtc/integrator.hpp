#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dtc {

// Classical fourth-order Runge-Kutta. State only needs vector-space ops
// (copy, +, scalar *), so the same stepper drives Bloch vectors and density
// matrices. The right-hand side is called as rhs(state, t).
template <typename State, typename Rhs, typename Time>
State rk4_step(const State& s, Rhs&& rhs, Time t, Time dt) {
  const Time half = dt / Time(2);
  const State k1 = rhs(s, t);
  const State k2 = rhs(s + half * k1, t + half);
  const State k3 = rhs(s + half * k2, t + half);
  const State k4 = rhs(s + dt * k3, t + dt);
  return s + (dt / Time(6)) * (k1 + Time(2) * k2 + Time(2) * k3 + k4);
}

struct StepperConfig {
  double dt;
  int record_stride = 1;  // steps between full-state records (callers sample)
};

// Fixed-step integration over n_steps from t0. Times are computed by index,
// not accumulation, so long runs do not drift. after_step(state, t, i) runs
// after step i (1-based); it is the hook for recording and monitors, and may
// throw to abort.
template <typename State, typename Rhs, typename Time, typename Callback>
State integrate_steps(State s, Rhs&& rhs, Time t0, long n_steps, Time dt,
                      Callback&& after_step) {
  if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
  if (!(dt > Time(0))) throw std::invalid_argument("dt must be positive");
  for (long i = 0; i < n_steps; ++i) {
    const Time t = t0 + Time(i) * dt;
    s = rk4_step(s, rhs, t, dt);
    after_step(s, t0 + Time(i + 1) * dt, i + 1);
  }
  return s;
}

// Interval form: [t0, t1] must be an integer number of dt steps, so a
// piecewise-constant drive bound to step boundaries is never evaluated across
// its switch.
template <typename State, typename Rhs, typename Time, typename Callback>
State integrate_interval(State s, Rhs&& rhs, Time t0, Time t1, const StepperConfig& config,
                         Callback&& after_step) {
  if (!(config.dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(t1 >= t0)) throw std::invalid_argument("t1 must be >= t0");
  const double steps_real = double(t1 - t0) / config.dt;
  const long n_steps = std::lround(steps_real);
  if (std::abs(steps_real - double(n_steps)) > 1e-9 * (std::abs(steps_real) + 1))
    throw std::invalid_argument("(t1 - t0) must be an integer multiple of dt");
  return integrate_steps(std::move(s), std::forward<Rhs>(rhs), t0, n_steps, Time(config.dt),
                         std::forward<Callback>(after_step));
}

template <typename State, typename Rhs, typename Time>
State integrate_interval(State s, Rhs&& rhs, Time t0, Time t1, const StepperConfig& config) {
  return integrate_interval(std::move(s), std::forward<Rhs>(rhs), t0, t1, config,
                            [](const State&, Time, long) {});
}

}  // namespace dtc
