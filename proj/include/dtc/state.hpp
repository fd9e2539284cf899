#pragma once

#include <Eigen/Dense>

namespace dtc {

// Scaled observables shared by both regimes: (jx, jy, jz) is the Bloch vector
// <J>/(N/2), (x, p) are cavity quadratures <a+a^dag>/sqrt(2*N*omega) and
// i<a^dag-a>*sqrt(omega/(2*N)). In the mean-field limit the Bloch vector lives
// on the unit sphere.
template <typename Scalar = double>
using State5 = Eigen::Matrix<Scalar, 5, 1>;

enum StateIndex : int { kJx = 0, kJy = 1, kJz = 2, kX = 3, kP = 4 };

template <typename Scalar>
State5<Scalar> make_state(Scalar jx, Scalar jy, Scalar jz, Scalar x, Scalar p) {
  State5<Scalar> s;
  s << jx, jy, jz, x, p;
  return s;
}

template <typename Scalar>
Scalar bloch_norm(const State5<Scalar>& s) {
  return s.template head<3>().norm();
}

}  // namespace dtc
