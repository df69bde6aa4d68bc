#pragma once

// Petz-map reversal of a stored Lindblad trajectory. At reversal time t' the
// state rho^B is driven by
//
//   d rho^B/dt' = -i[H_r, rho^B] + sum_n D[L_{r,n}](rho^B)
//
// with generators built from the forward state rho = rho_{tau - t'}:
//
//   L_{r,n} = rho^{1/2} L_n^dag rho^{-1/2}
//   H_r     = -H + sum_n sum_{eta,eta'} c_M(eta, eta') <eta|M_n|eta'> |eta><eta'|
//   M_n     = L_{r,n}^dag L_{r,n} + L_n^dag L_n
//
// Also: the rotated-frame variant and a Kraus-level Petz map.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "jcctl/lindblad.hpp"
#include "jcctl/quantum_core.hpp"

namespace jcctl {

/// -(i/2)(sqrt(eta) - sqrt(eta')) / (sqrt(eta) + sqrt(eta')); zero when the
/// denominator is below 1e-12.
inline Complex c_M(double eta, double eta_prime) {
  if (eta < 0.0 || eta_prime < 0.0) throw ValidationError("c_M: arguments must be >= 0");
  const double a = std::sqrt(eta), b = std::sqrt(eta_prime);
  if (a + b < 1e-12) return 0.0;
  return Complex(0.0, -0.5 * (a - b) / (a + b));
}

struct ReversalGenerators {
  ComplexMatrix H_r;
  std::vector<ComplexMatrix> L_r;
  double epsilon = 0.0;
  /// Some L_n^dag maps part of the epsilon-support of the reference state onto
  /// its complement, where the pseudo-inverse has discarded the weight.
  bool support_leak = false;
};

namespace detail {

inline ReversalGenerators reversal_generators_from(const SpectralDecomposition& eig,
                                                   const LindbladModel& m, double epsilon) {
  const Eigen::Index d = eig.dim();
  const double top = std::max(eig.eigenvalues(d - 1), 0.0);
  const double cut = epsilon * top;
  RealVector s(d), inv_s(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double x = eig.eigenvalues(i);
    const bool kept = x >= cut && x > 0.0;
    s(i) = kept ? std::sqrt(x) : 0.0;
    inv_s(i) = kept ? 1.0 / s(i) : 0.0;
  }
  const ComplexMatrix& V = eig.eigenvectors;
  const ComplexMatrix sqrt_rho = V * s.cast<Complex>().asDiagonal() * V.adjoint();
  const ComplexMatrix inv_sqrt_rho = V * inv_s.cast<Complex>().asDiagonal() * V.adjoint();

  ComplexMatrix support = ComplexMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (inv_s(i) > 0.0) support += V.col(i) * V.col(i).adjoint();
  }
  const ComplexMatrix outside = ComplexMatrix::Identity(d, d) - support;

  ReversalGenerators g;
  g.epsilon = epsilon;
  ComplexMatrix M = ComplexMatrix::Zero(d, d);
  for (const auto& l : m.lindblads) {
    const ComplexMatrix lr = sqrt_rho * l.adjoint() * inv_sqrt_rho;
    M += lr.adjoint() * lr + l.adjoint() * l;
    const double scale = std::max(1.0, l.norm());
    if ((outside * l.adjoint() * support).norm() > 1e-8 * scale) g.support_leak = true;
    g.L_r.push_back(lr);
  }
  ComplexMatrix mb = V.adjoint() * M * V;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      mb(i, j) *= c_M(s(i) * s(i), s(j) * s(j));
    }
  }
  const ComplexMatrix hc = V * mb * V.adjoint();
  g.H_r = -m.H + hc;
  const double dev = hermitian_deviation(g.H_r);
  if (dev > 1e-10) {
    throw ValidationError("reversal_generators: H_r not Hermitian (deviation " +
                          std::to_string(dev) + ")");
  }
  g.H_r = 0.5 * (g.H_r + g.H_r.adjoint());
  return g;
}

}  // namespace detail

/// Generators at reference state rho_ref. Both rho^{1/2} and rho^{-1/2} are
/// restricted to the eigenvalues >= epsilon * max eigenvalue.
inline ReversalGenerators reversal_generators(const DensityState& rho_ref,
                                              const LindbladModel& m, double epsilon = 1e-10) {
  m.validate();
  if (rho_ref.dim() != m.dim()) throw ValidationError("reversal_generators: dimension mismatch");
  if (!(epsilon > 0.0)) throw ValidationError("reversal_generators: epsilon must be > 0");
  return detail::reversal_generators_from(hermitian_eig(rho_ref.matrix()), m, epsilon);
}

struct ReverseOptions {
  double epsilon = 1e-10;
  /// Abort when trace_distance(rho^B_{t'}, rho_{tau - t'}) exceeds this.
  double divergence_bound = 0.1;
  Tolerances tolerances{1e-10, 1e-10, 1e-9, -1e-6};
};

struct BackwardTrajectory {
  double dt = 0.0;
  std::vector<double> times;  // reversal time t'
  std::vector<DensityState> states;
  std::size_t support_leak_steps = 0;
};

namespace detail {

inline ComplexMatrix reversal_rhs(const ComplexMatrix& rho, const ReversalGenerators& g) {
  return lindblad_derivative(rho, LindbladModel{g.H_r, g.L_r});
}

/// Forward state at time t: the stored one when t is on the grid, otherwise
/// the linear interpolation of its neighbours.
inline ComplexMatrix forward_state_at(const ForwardTrajectory& fwd, double t) {
  const double x = t / fwd.dt;
  const double k = std::round(x);
  if (std::abs(x - k) < 1e-9) {
    return fwd.states[static_cast<std::size_t>(std::clamp(k, 0.0, double(fwd.steps())))];
  }
  const auto i = static_cast<std::size_t>(std::clamp(std::floor(x), 0.0, double(fwd.steps() - 1)));
  const double f = x - static_cast<double>(i);
  return (1.0 - f) * fwd.states[i] + f * fwd.states[i + 1];
}

/// Shared backward RK4 sweep. `rhs(rho, g, t')` evaluates the derivative for
/// the generators g built at rho_{tau - t'}; `target(j)` is what the state at
/// step j should track.
template <class Rhs, class Target>
BackwardTrajectory backward_sweep(const ForwardTrajectory& fwd, const LindbladModel& m,
                                  const ReverseOptions& opt, const ComplexMatrix& start,
                                  Rhs&& rhs, Target&& target) {
  m.validate();
  if (!(opt.epsilon > 0.0)) throw ValidationError("reverse_propagate: epsilon must be > 0");
  if (fwd.states.size() < 2) throw ValidationError("reverse_propagate: empty forward trajectory");
  const std::size_t n = fwd.steps();
  const double dt = fwd.dt;
  const double tau = fwd.tau;

  auto generators_at = [&](double t_fwd) {
    const ComplexMatrix ref = forward_state_at(fwd, t_fwd);
    return reversal_generators_from(hermitian_eig(0.5 * (ref + ref.adjoint()), 1e-8), m,
                                    opt.epsilon);
  };

  BackwardTrajectory out;
  out.dt = dt;
  out.times.reserve(n + 1);
  out.states.reserve(n + 1);
  ComplexMatrix rho = start;
  out.times.push_back(0.0);
  out.states.push_back(DensityState::trusted(rho));

  ReversalGenerators g_start = generators_at(tau);
  for (std::size_t j = 0; j < n; ++j) {
    const double tp = static_cast<double>(j) * dt;
    const double t_fwd = static_cast<double>(n - j) * dt;
    const ReversalGenerators g_mid = generators_at(t_fwd - 0.5 * dt);
    ReversalGenerators g_end = generators_at(static_cast<double>(n - j - 1) * dt);
    if (g_start.support_leak || g_mid.support_leak) ++out.support_leak_steps;

    const ComplexMatrix k1 = rhs(rho, g_start, tp);
    const ComplexMatrix k2 = rhs(rho + 0.5 * dt * k1, g_mid, tp + 0.5 * dt);
    const ComplexMatrix k3 = rhs(rho + 0.5 * dt * k2, g_mid, tp + 0.5 * dt);
    const ComplexMatrix k4 = rhs(rho + dt * k3, g_end, tp + dt);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint());

    const double t_now = static_cast<double>(j + 1) * dt;
    if (auto why = density_violation(rho, opt.tolerances)) {
      throw NumericalError("reverse_propagate: " + *why, t_now);
    }
    const double err = trace_distance(DensityState::trusted(rho),
                                      DensityState::trusted(target(j + 1)));
    if (err > opt.divergence_bound) {
      throw NumericalError("reverse_propagate: diverged from the forward path (trace distance " +
                               std::to_string(err) + ")",
                           t_now);
    }
    out.times.push_back(t_now);
    out.states.push_back(DensityState::trusted(rho));
    g_start = std::move(g_end);
  }
  return out;
}

}  // namespace detail

/// Backward trajectory rho^B over t' in [0, tau] starting from rho_tau.
/// states[j] should track fwd.states[n - j].
inline BackwardTrajectory reverse_propagate(const ForwardTrajectory& fwd, const LindbladModel& m,
                                            const ReverseOptions& opt = {}) {
  const std::size_t n = fwd.steps();
  return detail::backward_sweep(
      fwd, m, opt, fwd.states[n],
      [](const ComplexMatrix& rho, const ReversalGenerators& g, double) {
        return detail::reversal_rhs(rho, g);
      },
      [&](std::size_t j) { return fwd.states[n - j]; });
}

/// exp(-i H t) for Hermitian H.
inline ComplexMatrix unitary_propagator(const ComplexMatrix& H, double t) {
  const auto eig = hermitian_eig(H, 1e-12);
  ComplexVector ph(eig.dim());
  for (Eigen::Index i = 0; i < eig.dim(); ++i) ph(i) = std::exp(-kI * eig.eigenvalues(i) * t);
  return eig.eigenvectors * ph.asDiagonal() * eig.eigenvectors.adjoint();
}

/// beta_{t'} = U(t') rho^B_{t'} U^dag(t'), U = exp(-i H t'), propagated
/// directly: the H terms cancel, leaving
///   d beta/dt' = -i[U H_c U^dag, beta] + sum_n D[U L_{r,n} U^dag](beta).
/// beta(tau) should approach U(tau) rho_0 U^dag(tau).
inline BackwardTrajectory rotated_reversal(const ForwardTrajectory& fwd, const LindbladModel& m,
                                           const ReverseOptions& opt = {}) {
  const std::size_t n = fwd.steps();
  const auto eig = hermitian_eig(m.H, 1e-12);
  auto U = [&](double t) {
    ComplexVector ph(eig.dim());
    for (Eigen::Index i = 0; i < eig.dim(); ++i) ph(i) = std::exp(-kI * eig.eigenvalues(i) * t);
    return ComplexMatrix(eig.eigenvectors * ph.asDiagonal() * eig.eigenvectors.adjoint());
  };
  return detail::backward_sweep(
      fwd, m, opt, fwd.states[n],
      [&](const ComplexMatrix& beta, const ReversalGenerators& g, double tp) {
        const ComplexMatrix u = U(tp);
        LindbladModel rotated{u * (g.H_r + m.H) * u.adjoint(), {}};
        rotated.H = 0.5 * (rotated.H + rotated.H.adjoint());
        for (const auto& lr : g.L_r) rotated.lindblads.push_back(u * lr * u.adjoint());
        return lindblad_derivative(beta, rotated);
      },
      [&](std::size_t j) {
        const ComplexMatrix u = U(static_cast<double>(j) * fwd.dt);
        return ComplexMatrix(u * fwd.states[n - j] * u.adjoint());
      });
}

/// Kraus operators of the channel with column-stacked superoperator S, from
/// the eigen-decomposition of its Choi matrix. Eigenvalues below
/// 1e-14 * max are dropped.
inline std::vector<ComplexMatrix> kraus_from_superoperator(const ComplexMatrix& S) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(S.rows()))));
  if (d * d != S.rows() || S.rows() != S.cols()) {
    throw ValidationError("kraus_from_superoperator: expected a d^2 x d^2 matrix");
  }
  // C[(k, i), (l, j)] = N(|k><l|)_{ij} = S[i + d j, k + d l]
  ComplexMatrix choi(d * d, d * d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l)
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) choi(k * d + i, l * d + j) = S(i + d * j, k + d * l);
  const auto eig = hermitian_eig(0.5 * (choi + choi.adjoint()), 1e-8);
  const double top = eig.eigenvalues.maxCoeff();
  std::vector<ComplexMatrix> kraus;
  for (Eigen::Index c = eig.dim() - 1; c >= 0; --c) {
    const double mu = eig.eigenvalues(c);
    if (mu <= 1e-14 * top) continue;
    ComplexMatrix K(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index i = 0; i < d; ++i) K(i, k) = std::sqrt(mu) * eig.eigenvectors(k * d + i, c);
    kraus.push_back(std::move(K));
  }
  return kraus;
}

/// Kraus operators of exp(dt * generator) for a Lindblad model.
inline std::vector<ComplexMatrix> lindblad_step_kraus(const LindbladModel& m, double dt) {
  const ComplexMatrix S = (dt * lindblad_superoperator(m)).exp();
  return kraus_from_superoperator(S);
}

inline ComplexMatrix apply_channel(const std::vector<ComplexMatrix>& kraus,
                                   const ComplexMatrix& x) {
  ComplexMatrix out = ComplexMatrix::Zero(x.rows(), x.cols());
  for (const auto& k : kraus) out += k * x * k.adjoint();
  return out;
}

/// Largest entry of |sum_k K^dag K - I|.
inline double kraus_completeness_error(const std::vector<ComplexMatrix>& kraus) {
  if (kraus.empty()) throw ValidationError("Kraus set is empty");
  const Eigen::Index d = kraus.front().cols();
  ComplexMatrix sum = ComplexMatrix::Zero(d, d);
  for (const auto& k : kraus) sum += k.adjoint() * k;
  return (sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

/// Petz recovery map rho0^{1/2} N^dag[sigma^{-1/2} X sigma^{-1/2}] rho0^{1/2},
/// sigma = N(rho0), with sigma^{-1/2} on eigenvalues >= epsilon * max.
inline DensityState petz_map_apply(const DensityState& rho0_ref,
                                   const std::vector<ComplexMatrix>& kraus, const DensityState& X,
                                   double epsilon = 1e-10, const Tolerances& tol = {}) {
  if (kraus.empty()) throw ValidationError("petz_map_apply: empty Kraus set");
  for (const auto& k : kraus) {
    if (k.rows() != X.dim() || k.cols() != rho0_ref.dim()) {
      throw ValidationError("petz_map_apply: Kraus operator dimension mismatch");
    }
  }
  const double complete = kraus_completeness_error(kraus);
  if (complete > 1e-10) {
    throw ValidationError("petz_map_apply: Kraus set not complete (error " +
                          std::to_string(complete) + ")");
  }
  ComplexMatrix sigma = apply_channel(kraus, rho0_ref.matrix());
  sigma = 0.5 * (sigma + sigma.adjoint());
  const double top = hermitian_eig(sigma).eigenvalues.maxCoeff();
  const ComplexMatrix s_inv = pinv_sqrt(sigma, epsilon * top);
  const ComplexMatrix y = s_inv * X.matrix() * s_inv;
  ComplexMatrix adj = ComplexMatrix::Zero(rho0_ref.dim(), rho0_ref.dim());
  for (const auto& k : kraus) adj += k.adjoint() * y * k;
  const ComplexMatrix r = psd_sqrt(rho0_ref.matrix());
  ComplexMatrix out = r * adj * r;
  out = 0.5 * (out + out.adjoint());
  return DensityState(out, tol);
}

/// Composed single-step Petz maps of a discretized channel. The forward
/// states are generated by the channel itself from rho0; the returned
/// sequence starts at rho_n and applies R_{rho_{k-1}, N} for k = n .. 1.
inline std::vector<DensityState> composed_petz_reversal(const DensityState& rho0,
                                                        const std::vector<ComplexMatrix>& kraus,
                                                        std::size_t n, double epsilon = 1e-10) {
  const Tolerances loose{1e-10, 1e-10, 1e-9, -1e-6};
  std::vector<ComplexMatrix> fwd{rho0.matrix()};
  for (std::size_t k = 0; k < n; ++k) {
    ComplexMatrix next = apply_channel(kraus, fwd.back());
    fwd.push_back(0.5 * (next + next.adjoint()));
  }
  std::vector<DensityState> out{DensityState::trusted(fwd.back())};
  for (std::size_t k = n; k >= 1; --k) {
    out.push_back(petz_map_apply(DensityState::trusted(fwd[k - 1]), kraus, out.back(), epsilon,
                                 loose));
  }
  return out;
}

}  // namespace jcctl
