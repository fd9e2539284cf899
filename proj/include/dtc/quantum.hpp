#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dtc/diagnostics.hpp"
#include "dtc/integrator.hpp"
#include "dtc/params.hpp"
#include "dtc/state.hpp"

namespace dtc {

template <typename Scalar = double>
using MatC = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar = double>
using VecC = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar = double>
using VecR = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar = double>
using SpMatC = Eigen::SparseMatrix<std::complex<Scalar>>;

// Collective spin operators on the maximal Dicke sector j = N/2 (dimension
// N+1). Every term in the model is collective and the initial state is the
// fully symmetric |Jx = N/2>, so the dynamics never leaves this sector. Basis
// ordering: Jz eigenvalue m descending, m = j - row.
template <typename Scalar = double>
struct CollectiveOps {
  MatC<Scalar> Jx, Jy, Jz, Jminus;
};

template <typename Scalar = double>
CollectiveOps<Scalar> build_collective_ops(int n_spins) {
  if (n_spins < 1) throw std::invalid_argument("n_spins must be >= 1");
  using C = std::complex<Scalar>;
  const int dim = n_spins + 1;
  const Scalar j = Scalar(n_spins) / 2;
  CollectiveOps<Scalar> ops;
  ops.Jz = MatC<Scalar>::Zero(dim, dim);
  ops.Jminus = MatC<Scalar>::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const Scalar m = j - Scalar(k);
    ops.Jz(k, k) = m;
    if (k + 1 < dim)  // J-|j,m> = sqrt(j(j+1) - m(m-1)) |j,m-1>
      ops.Jminus(k + 1, k) = std::sqrt(j * (j + 1) - m * (m - 1));
  }
  const MatC<Scalar> Jplus = ops.Jminus.adjoint();
  ops.Jx = (Jplus + ops.Jminus) / Scalar(2);
  ops.Jy = (Jplus - ops.Jminus) / C(0, 2);
  return ops;
}

template <typename Scalar = double>
struct BosonOps {
  MatC<Scalar> a, a_dag, n_op;
};

template <typename Scalar = double>
BosonOps<Scalar> build_boson_ops(int n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const int dim = n_max + 1;
  BosonOps<Scalar> ops;
  ops.a = MatC<Scalar>::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) ops.a(n - 1, n) = std::sqrt(Scalar(n));
  ops.a_dag = ops.a.adjoint();
  ops.n_op = ops.a_dag * ops.a;  // diag(0..n_max) exactly
  return ops;
}

template <typename Scalar>
MatC<Scalar> kron(const MatC<Scalar>& A, const MatC<Scalar>& B) {
  MatC<Scalar> out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// Operators lifted to the product space spin (x) Fock; composite index
// i = s*(n_max+1) + n with s the Dicke row and n the Fock level.
template <typename Scalar = double>
struct SystemOps {
  int n_spins = 0;
  int n_max = 0;
  int dim = 0;
  MatC<Scalar> Jx, Jy, Jz, Jz2, Jminus, a, a_dag, n_op;
};

template <typename Scalar = double>
SystemOps<Scalar> build_system_ops(int n_spins, int n_max) {
  const auto spin = build_collective_ops<Scalar>(n_spins);
  const auto boson = build_boson_ops<Scalar>(n_max);
  const MatC<Scalar> Is = MatC<Scalar>::Identity(n_spins + 1, n_spins + 1);
  const MatC<Scalar> If = MatC<Scalar>::Identity(n_max + 1, n_max + 1);
  SystemOps<Scalar> ops;
  ops.n_spins = n_spins;
  ops.n_max = n_max;
  ops.dim = (n_spins + 1) * (n_max + 1);
  ops.Jx = kron(spin.Jx, If);
  ops.Jy = kron(spin.Jy, If);
  ops.Jz = kron(spin.Jz, If);
  ops.Jz2 = kron<Scalar>(spin.Jz * spin.Jz, If);
  ops.Jminus = kron(spin.Jminus, If);
  ops.a = kron(Is, boson.a);
  ops.a_dag = kron(Is, boson.a_dag);
  ops.n_op = kron(Is, boson.n_op);
  return ops;
}

// H = omega0 Jz + omega a^dag a + (h/N) Jz^2 + (2 lambda/sqrt(N)) Jx (a+a^dag).
// Commuting tensor factors, so products of the lifted operators realize the
// tensor-product terms exactly.
template <typename Scalar>
MatC<Scalar> build_hamiltonian(const SystemOps<Scalar>& ops, const SystemParams<Scalar>& par,
                               Scalar lambda_now) {
  if (ops.Jx.rows() != ops.a.rows() || ops.dim != ops.Jx.rows())
    throw std::invalid_argument("operator dimensions do not match");
  const Scalar n = Scalar(ops.n_spins);
  return par.omega0 * ops.Jz + par.omega * ops.n_op + (par.h / n) * ops.Jz2 +
         (2 * lambda_now / std::sqrt(n)) * (ops.Jx * (ops.a + ops.a_dag));
}

// Dissipator D[A]rho = A rho A^dag - (A^dag A rho + rho A^dag A)/2.
template <typename Scalar>
MatC<Scalar> dissipator(const MatC<Scalar>& A, const MatC<Scalar>& rho) {
  const MatC<Scalar> AdA = A.adjoint() * A;
  return A * rho * A.adjoint() - (AdA * rho + rho * AdA) / Scalar(2);
}

// Full generator, written exactly as the master equation reads: unitary part
// plus cavity loss at gamma, collective decay at Gamma/N, and collective
// dephasing (Gamma_tilde/N) D[2 Jz]. Reference implementation; the propagator
// uses a sparse equivalent validated against this one.
template <typename Scalar>
MatC<Scalar> lindblad_rhs(const MatC<Scalar>& rho, const MatC<Scalar>& H,
                          const SystemParams<Scalar>& par, const SystemOps<Scalar>& ops) {
  using C = std::complex<Scalar>;
  if ((rho - MatC<Scalar>(rho.adjoint())).cwiseAbs().maxCoeff() > Scalar(1e-9))
    throw std::invalid_argument("rho must be Hermitian");
  const Scalar n = Scalar(ops.n_spins);
  MatC<Scalar> out = C(0, -1) * (H * rho - rho * H);
  if (par.gamma > 0) out += par.gamma * dissipator(ops.a, rho);
  if (par.Gamma > 0) out += (par.Gamma / n) * dissipator(ops.Jminus, rho);
  if (par.Gamma_tilde > 0)
    out += (par.Gamma_tilde / n) * dissipator<Scalar>(Scalar(2) * ops.Jz, rho);
  return out;
}

// Truncated coherent state, amplitudes alpha^n/sqrt(n!), renormalized after
// truncation. Rejects truncations that cut more than 1e-6 of the norm.
template <typename Scalar>
VecC<Scalar> coherent_state(std::complex<Scalar> alpha, int n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  VecC<Scalar> v(n_max + 1);
  v[0] = Scalar(1);
  for (int n = 1; n <= n_max; ++n) v[n] = v[n - 1] * alpha / std::sqrt(Scalar(n));
  const Scalar truncated = v.squaredNorm();
  const Scalar full = std::exp(std::norm(alpha));  // sum_n |alpha|^{2n}/n!
  if (Scalar(1) - truncated / full > Scalar(1e-6))
    throw std::invalid_argument("photon truncation inadequate for this alpha");
  return v / std::sqrt(truncated);
}

// Fully polarized |Jx = N/2> in the Jz basis: binomial amplitudes, all
// positive. Product of N single-spin |+x> states restricted to the symmetric
// sector.
template <typename Scalar = double>
VecC<Scalar> max_jx_state(int n_spins) {
  if (n_spins < 1) throw std::invalid_argument("n_spins must be >= 1");
  VecC<Scalar> v(n_spins + 1);
  Scalar binom = 1;  // C(N, k), updated iteratively
  for (int k = 0; k <= n_spins; ++k) {
    v[k] = std::sqrt(binom) / std::pow(Scalar(2), Scalar(n_spins) / 2);
    binom *= Scalar(n_spins - k) / Scalar(k + 1);
  }
  return v;
}

// |Jx = N/2> (x) |alpha> as a pure density matrix.
template <typename Scalar>
MatC<Scalar> initial_state(int n_spins, std::complex<Scalar> alpha, int n_max) {
  const VecC<Scalar> spin = max_jx_state<Scalar>(n_spins);
  const VecC<Scalar> cavity = coherent_state(alpha, n_max);
  VecC<Scalar> psi(spin.size() * cavity.size());
  for (Eigen::Index s = 0; s < spin.size(); ++s)
    psi.segment(s * cavity.size(), cavity.size()) = spin[s] * cavity;
  return psi * psi.adjoint();
}

template <typename Scalar>
std::complex<Scalar> trace_of_product(const MatC<Scalar>& A, const MatC<Scalar>& rho) {
  return (A.transpose().cwiseProduct(rho)).sum();  // tr(A rho) without forming the product
}

// Scaled observables: Bloch vector <J>/(N/2) and cavity quadratures
// x = <a+a^dag>/sqrt(2 N omega), p = i<a^dag-a> sqrt(omega/(2N)).
template <typename Scalar>
State5<Scalar> expectations(const MatC<Scalar>& rho, const SystemOps<Scalar>& ops,
                            const SystemParams<Scalar>& par) {
  using C = std::complex<Scalar>;
  const Scalar j = Scalar(ops.n_spins) / 2;
  State5<Scalar> s;
  s[kJx] = trace_of_product(ops.Jx, rho).real() / j;
  s[kJy] = trace_of_product(ops.Jy, rho).real() / j;
  s[kJz] = trace_of_product(ops.Jz, rho).real() / j;
  const C a_exp = trace_of_product(ops.a, rho);
  const Scalar n = Scalar(ops.n_spins);
  s[kX] = Scalar(2) * a_exp.real() / std::sqrt(2 * n * par.omega);
  s[kP] = (C(0, 1) * (std::conj(a_exp) - a_exp)).real() * std::sqrt(par.omega / (2 * n));
  return s;
}

// P = exp(-i pi (a^dag a + Jz)): diagonal phases over Fock level n and Jz
// eigenvalue m. Generated by the free half-period at epsilon = 0, h = 0.
template <typename Scalar = double>
MatC<Scalar> parity_operator(int n_spins, int n_max) {
  using C = std::complex<Scalar>;
  const int dim = (n_spins + 1) * (n_max + 1);
  const Scalar j = Scalar(n_spins) / 2;
  MatC<Scalar> P = MatC<Scalar>::Zero(dim, dim);
  for (int s = 0; s <= n_spins; ++s) {
    const Scalar m = j - Scalar(s);
    for (int n = 0; n <= n_max; ++n)
      P(s * (n_max + 1) + n, s * (n_max + 1) + n) =
          std::exp(C(0, -std::numbers::pi_v<Scalar> * (Scalar(n) + m)));
  }
  return P;
}

enum class Half { First, Second };

// Unitary propagator over one half-period. The Hamiltonian is constant on
// each half (lambda_on or 0), so steps = 0 propagates by eigendecomposition;
// steps > 0 integrates dU/dt = -iHU with RK4 for cross-checks.
template <typename Scalar>
MatC<Scalar> half_period_propagator(const SystemParams<Scalar>& par, int n_max, Half half,
                                    int steps = 0) {
  using C = std::complex<Scalar>;
  if (par.gamma != 0 || par.Gamma != 0 || par.Gamma_tilde != 0)
    throw std::invalid_argument("half-period propagator is unitary: dissipation must be zero");
  const auto ops = build_system_ops<Scalar>(par.n_spins, n_max);
  const Scalar lam = half == Half::First ? par.lambda : Scalar(0);
  const MatC<Scalar> H = build_hamiltonian(ops, par, lam);
  const Scalar duration = par.period() / 2;
  if (steps == 0) {
    Eigen::SelfAdjointEigenSolver<MatC<Scalar>> es(H);
    VecC<Scalar> phases(ops.dim);
    for (int i = 0; i < ops.dim; ++i)
      phases[i] = std::exp(C(0, -es.eigenvalues()[i] * duration));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  if (steps < 1) throw std::invalid_argument("steps must be >= 0");
  MatC<Scalar> U = MatC<Scalar>::Identity(ops.dim, ops.dim);
  const Scalar dt = duration / Scalar(steps);
  auto rhs = [&H](const MatC<Scalar>& u, Scalar) { return MatC<Scalar>(C(0, -1) * (H * u)); };
  for (int k = 0; k < steps; ++k) U = rk4_step(U, rhs, Scalar(k) * dt, dt);
  return U;
}

template <typename Scalar = double>
struct QuantumConfig {
  SystemParams<Scalar> params;
  int n_max = 16;
  std::complex<Scalar> alpha = Scalar(0.01);
  // Top-Fock-level population that aborts the run. Regimes with strong spin
  // dephasing park a small stationary population on the top level; raise the
  // cap only after checking observables are converged in n_max.
  Scalar truncation_abort = Scalar(1e-4);
};

// Population watchdog warn level and trace-drift abort level.
inline constexpr double kTruncationWarn = 1e-6;
inline constexpr double kTraceAbortTol = 1e-6;

template <typename Scalar = double>
struct QuantumRun {
  RunRecord<Scalar> rec;
  std::vector<Scalar> trace_err;  // |tr(rho) - 1| at each t = nT
  std::vector<Scalar> herm_err;   // max |rho - rho^dag| at each t = nT
  std::vector<Scalar> top_fock;   // top Fock level population at each t = nT
  std::vector<Scalar> purity;     // tr(rho^2) at each t = nT
  std::vector<Scalar> min_eig;    // filled only when track_spectrum
  MatC<Scalar> final_rho;
  RunStatus status = RunStatus::Ok;
  std::string message;
  bool truncation_warning = false;
};

namespace detail {

// Sparse form of the generator. All three jump operators have diagonal A^dag A
// (photon number; J+J- = j(j+1) - Jz^2 + Jz; 4 Jz^2), so the anticommutator
// collapses to an entrywise scaling by the symmetric matrix
// decay(i,j) = sum_jumps rate/2 * (AdA_ii + AdA_jj). Writing each piece in a
// manifestly self-adjoint form keeps the output exactly Hermitian in floating
// point, so Hermiticity of rho is preserved by construction, not projection.
template <typename Scalar>
struct FastGenerator {
  using C = std::complex<Scalar>;
  struct Jump {
    Scalar half_rate;
    SpMatC<Scalar> A, A_adj;
  };
  SpMatC<Scalar> H_on, H_off;
  std::vector<Jump> jumps;
  MatC<Scalar> decay;            // real symmetric, stored complex for cwise ops
  mutable MatC<Scalar> S, M, G;  // scratch, sized once

  FastGenerator(const SystemOps<Scalar>& ops, const SystemParams<Scalar>& par,
                Scalar lambda_on) {
    H_on = build_hamiltonian(ops, par, lambda_on).sparseView();
    H_off = build_hamiltonian(ops, par, Scalar(0)).sparseView();
    VecR<Scalar> half_ada_sum = VecR<Scalar>::Zero(ops.dim);
    auto add_jump = [&](Scalar rate, const MatC<Scalar>& A) {
      if (rate <= 0) return;
      Jump j;
      j.half_rate = rate / 2;
      j.A = A.sparseView();
      j.A_adj = MatC<Scalar>(A.adjoint()).sparseView();
      half_ada_sum += (rate / 2) * MatC<Scalar>(A.adjoint() * A).diagonal().real();
      jumps.push_back(std::move(j));
    };
    const Scalar n = Scalar(ops.n_spins);
    add_jump(par.gamma, ops.a);
    add_jump(par.Gamma / n, ops.Jminus);
    add_jump(par.Gamma_tilde / n, MatC<Scalar>(Scalar(2) * ops.Jz));
    decay = (half_ada_sum.rowwise().replicate(ops.dim) +
             half_ada_sum.transpose().colwise().replicate(ops.dim))
                .template cast<C>();
    S.resize(ops.dim, ops.dim);
    M.resize(ops.dim, ops.dim);
    G.resize(ops.dim, ops.dim);
  }

  void apply(const MatC<Scalar>& rho, bool drive_on, MatC<Scalar>& out) const {
    const SpMatC<Scalar>& H = drive_on ? H_on : H_off;
    S.noalias() = H * rho;
    out = C(0, -1) * (S - S.adjoint());  // exactly Hermitian for Hermitian rho
    for (const auto& j : jumps) {
      M.noalias() = j.A * rho;
      G.noalias() = M * j.A_adj;
      out += j.half_rate * (G + G.adjoint());
    }
    out -= decay.cwiseProduct(rho);
  }
};

}  // namespace detail

// Floquet propagation of the master equation: RK4 on the density matrix with
// the coupling frozen per half-period. Scaled observables are recorded every
// record_stride steps plus at every t = nT; trace drift and top-Fock
// population are monitored each period and abort the run (partial record
// returned) when they leave their safe ranges.
template <typename Scalar>
QuantumRun<Scalar> propagate_floquet(const QuantumConfig<Scalar>& config,
                                     const DriveProtocol<Scalar>& proto, int steps_per_period,
                                     int record_stride = 1, bool track_spectrum = false) {
  if (steps_per_period < 2 || steps_per_period % 2 != 0)
    throw std::invalid_argument("steps_per_period must be even and >= 2");
  if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
  const auto& par = config.params;
  const auto ops = build_system_ops<Scalar>(par.n_spins, config.n_max);
  const detail::FastGenerator<Scalar> gen(ops, par, proto.lambda_on);

  const Scalar T = proto.period;
  const Scalar dt = T / Scalar(steps_per_period);
  const int half_steps = steps_per_period / 2;
  const int fock_dim = config.n_max + 1;

  QuantumRun<Scalar> out;
  out.rec.strobe.period = T;
  MatC<Scalar> rho = initial_state(par.n_spins, config.alpha, config.n_max);
  MatC<Scalar> k1(ops.dim, ops.dim), k2(ops.dim, ops.dim), k3(ops.dim, ops.dim),
      k4(ops.dim, ops.dim), stage(ops.dim, ops.dim);

  auto top_population = [&](const MatC<Scalar>& r) {
    Scalar pop = 0;
    for (int s = 0; s <= par.n_spins; ++s) {
      const int i = s * fock_dim + config.n_max;
      pop += r(i, i).real();
    }
    return pop;
  };
  auto record_monitors = [&](const MatC<Scalar>& r) {
    out.trace_err.push_back(std::abs(r.trace() - std::complex<Scalar>(1)));
    out.herm_err.push_back((r - MatC<Scalar>(r.adjoint())).cwiseAbs().maxCoeff());
    out.top_fock.push_back(top_population(r));
    out.purity.push_back(trace_of_product(r, r).real());
    if (track_spectrum) {
      Eigen::SelfAdjointEigenSolver<MatC<Scalar>> es(r, Eigen::EigenvaluesOnly);
      out.min_eig.push_back(es.eigenvalues().minCoeff());
    }
  };

  out.rec.times.push_back(0);
  out.rec.series.push_back(expectations(rho, ops, par));
  out.rec.strobe.samples.push_back(out.rec.series.back());
  record_monitors(rho);

  long step = 0;
  for (int n = 0; n < proto.n_periods; ++n) {
    for (int half = 0; half < 2; ++half) {
      const bool drive_on = half == 0;
      const Scalar t0 = (Scalar(n) + Scalar(half) / Scalar(2)) * T;
      for (int k = 0; k < half_steps; ++k) {
        gen.apply(rho, drive_on, k1);
        stage = rho + (dt / 2) * k1;
        gen.apply(stage, drive_on, k2);
        stage = rho + (dt / 2) * k2;
        gen.apply(stage, drive_on, k3);
        stage = rho + dt * k3;
        gen.apply(stage, drive_on, k4);
        rho += (dt / 6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
        ++step;
        if (step % record_stride == 0) {
          out.rec.times.push_back(t0 + Scalar(k + 1) * dt);
          out.rec.series.push_back(expectations(rho, ops, par));
        }
      }
    }
    out.rec.strobe.samples.push_back(expectations(rho, ops, par));
    record_monitors(rho);
    const Scalar pop = out.top_fock.back();
    if (pop > Scalar(kTruncationWarn)) out.truncation_warning = true;
    if (pop > config.truncation_abort) {
      std::ostringstream msg;
      msg << "top Fock level population " << double(pop) << " exceeds "
          << double(config.truncation_abort) << " after period " << n + 1
          << ": raise n_max";
      out.status = RunStatus::TruncationAbort;
      out.message = msg.str();
      break;
    }
    if (out.trace_err.back() > Scalar(kTraceAbortTol)) {
      std::ostringstream msg;
      msg << "trace drift " << double(out.trace_err.back()) << " exceeds " << kTraceAbortTol
          << " after period " << n + 1 << ": reduce the step size";
      out.status = RunStatus::TraceAbort;
      out.message = msg.str();
      break;
    }
  }
  out.final_rho = std::move(rho);
  return out;
}

}  // namespace dtc
