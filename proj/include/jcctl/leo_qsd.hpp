#pragma once

// Non-Markovian dynamics of the LEO-controlled JC model through the noise-free
// O-bar operator master equation
//
//   d rho/dt = -i[H_s + c(t) R, rho] + [L, rho Obar^dag] - [L^dag, Obar rho],
//   Obar(t)  = F1(t) |g0><e0| + F2(t) |g0><g1|,
//
// with the memory integrals F1, F2 co-integrated as a closed ODE pair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "jcctl/jc_model.hpp"
#include "jcctl/pulse.hpp"
#include "jcctl/quantum_core.hpp"

namespace jcctl {

/// The pair of memory integrals F_i(t) = int_0^t alpha(t,s) f_i(t,s) ds.
struct OOperatorState {
  Complex F1{0.0, 0.0};
  Complex F2{0.0, 0.0};

  OOperatorState operator+(const OOperatorState& o) const { return {F1 + o.F1, F2 + o.F2}; }
  OOperatorState operator*(double s) const { return {F1 * s, F2 * s}; }
};

/// Time derivative of (F1, F2) at control value c. Differentiating F_i under
/// the integral with d_t alpha = -gamma_eff alpha and the boundary values
/// f1(t,t) = 0, f2(t,t) = lambda gives
///   dF1/dt = (i omega - gamma_eff) F1 + (i kappa + lambda F1) F2
///   dF2/dt = lambda gamma/2 + i kappa F1 + (i(omega_c - 2c) - gamma_eff) F2 + lambda F2^2
inline OOperatorState o_operator_derivative(const OOperatorState& o, const JCParams& p,
                                            double c) {
  const Complex ge = p.gamma_eff();
  return {(kI * p.omega - ge) * o.F1 + (kI * p.kappa + p.lambda * o.F1) * o.F2,
          p.lambda * p.gamma / 2.0 + kI * p.kappa * o.F1 +
              (kI * (p.omega_c - 2.0 * c) - ge) * o.F2 + p.lambda * o.F2 * o.F2};
}

/// G(t) = lambda [gamma/2 + F2^2] + i kappa F1, the slowly varying kernel
/// under the control's oscillating envelope.
inline Complex o_kernel(const OOperatorState& o, const JCParams& p) {
  return p.lambda * (p.gamma / 2.0 + o.F2 * o.F2) + kI * p.kappa * o.F1;
}

struct LeoOptions {
  double T = 10.0;
  double dt = 1e-4;
  std::size_t stride = 10;  // store every stride-th step
  Tolerances tolerances{};
  /// When set, the trajectory's fidelity series is filled against the ideal
  /// protected-space evolution of this state.
  std::optional<ComplexVector> ideal_reference{};
};

struct LeoTrajectory {
  std::vector<double> times;
  std::vector<DensityState> states;
  std::vector<OOperatorState> o_states;
  std::vector<double> fidelity;
};

namespace detail {

inline std::size_t step_count(double T, double dt, const char* who) {
  if (!(dt > 0.0) || !(T > 0.0) || !divides(T, dt)) {
    throw ValidationError(std::string(who) + ": T must be a positive integer multiple of dt");
  }
  return static_cast<std::size_t>(std::llround(T / dt));
}

/// Right-hand side of the controlled master equation, with preallocated
/// workspace. Uses d rho = Y + Y^dag so the derivative is exactly Hermitian.
class LeoRhs {
 public:
  explicit LeoRhs(const JCParams& p)
      : p_(p),
        hs_(build_system_hamiltonian(p)),
        l_(build_lindblad(p)),
        r_diag_(build_leo_operator(p.n_max).diagonal().real()),
        g0_(basis_index(Atom::ground, 0, p.n_max)),
        e0_(basis_index(Atom::excited, 0, p.n_max)),
        g1_(basis_index(Atom::ground, 1, p.n_max)),
        y_(p.dim(), p.dim()),
        row_(p.dim()),
        lcol_(p.dim()),
        ldag_g0_(l_.adjoint().col(g0_)) {}

  void operator()(const ComplexMatrix& rho, const OOperatorState& o, double c,
                  ComplexMatrix& drho, OOperatorState& d_o) {
    const Eigen::Index d = rho.rows();
    y_.noalias() = hs_ * rho;
    for (Eigen::Index i = 0; i < d; ++i) y_.row(i) += (c * r_diag_(i)) * rho.row(i);
    y_ *= -kI;
    // Obar rho has a single nonzero row (g0).
    row_ = o.F1 * rho.row(e0_) + o.F2 * rho.row(g1_);
    // L (Obar rho)^dag has a single nonzero column (g0).
    lcol_.noalias() = l_ * row_.adjoint();
    y_.col(g0_) += lcol_;
    // L^dag Obar rho = (L^dag |g0>) row
    y_.noalias() -= ldag_g0_ * row_;
    drho = y_ + y_.adjoint();
    d_o = o_operator_derivative(o, p_, c);
  }

 private:
  JCParams p_;
  ComplexMatrix hs_;
  ComplexMatrix l_;
  RealVector r_diag_;
  Eigen::Index g0_, e0_, g1_;
  ComplexMatrix y_;
  Eigen::RowVectorXcd row_;
  ComplexVector lcol_;
  ComplexVector ldag_g0_;
};

}  // namespace detail

/// Ideal protected-space evolution U_p(t)|phi0> with H_P = omega sigma_z / 2.
/// phi0 must lie in span{|g0>, |e0>}.
inline ComplexVector ideal_protected_state(const ComplexVector& phi0, const JCParams& p,
                                           double t) {
  const ComplexMatrix proj = protected_projector(p.n_max);
  if (phi0.size() != p.dim() || (phi0 - proj * phi0).norm() > 1e-12 * phi0.norm()) {
    throw ValidationError("ideal reference state must lie in the protected space");
  }
  ComplexVector out = phi0 / phi0.norm();
  out(basis_index(Atom::ground, 0, p.n_max)) *= std::exp(kI * (0.5 * p.omega * t));
  out(basis_index(Atom::excited, 0, p.n_max)) *= std::exp(-kI * (0.5 * p.omega * t));
  return out;
}

/// (|g0> + |e0>)/sqrt(2)
inline ComplexVector protected_plus_state(int n_max) {
  return (basis_ket(Atom::ground, 0, n_max) + basis_ket(Atom::excited, 0, n_max)) /
         std::sqrt(2.0);
}

/// Element-wise fidelity between trajectory states and the ideal state.
inline std::vector<double> fidelity_vs_ideal(const LeoTrajectory& traj, const JCParams& p,
                                             const ComplexVector& phi0) {
  std::vector<double> out(traj.states.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = fidelity_pure(traj.states[k], ideal_protected_state(phi0, p, traj.times[k]));
  }
  return out;
}

/// Co-integrate rho and (F1, F2) with classical RK4 at fixed step.
inline LeoTrajectory propagate_leo(const DensityState& rho0, const JCParams& p,
                                   const PulseRealization& pulse, const LeoOptions& opt) {
  p.validate();
  if (rho0.dim() != p.dim()) throw ValidationError("propagate_leo: state dimension mismatch");
  check_pulse_alignment(pulse.spec(), opt.dt);
  if (opt.stride == 0) throw ValidationError("propagate_leo: stride must be >= 1");
  const std::size_t steps = detail::step_count(opt.T, opt.dt, "propagate_leo");
  const double h = opt.dt;

  detail::LeoRhs rhs(p);
  const Eigen::Index d = p.dim();
  ComplexMatrix rho = rho0.matrix();
  OOperatorState o{};
  ComplexMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
  OOperatorState o1, o2, o3, o4;

  LeoTrajectory traj;
  const std::size_t samples = steps / opt.stride + 1;
  traj.times.reserve(samples);
  traj.states.reserve(samples);
  traj.o_states.reserve(samples);

  auto store = [&](std::size_t step) {
    const double t = static_cast<double>(step) * h;
    if (auto why = density_violation(rho, opt.tolerances)) {
      throw NumericalError("propagate_leo: " + *why, t);
    }
    traj.times.push_back(t);
    traj.states.push_back(DensityState::trusted(rho));
    traj.o_states.push_back(o);
  };

  store(0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * h;
    const double c0 = pulse.stage_value(t0, h, 0.0);
    const double c1 = pulse.stage_value(t0, h, 0.5);
    const double c2 = pulse.stage_value(t0, h, 1.0);

    rhs(rho, o, c0, k1, o1);
    tmp = rho + (0.5 * h) * k1;
    rhs(tmp, o + o1 * (0.5 * h), c1, k2, o2);
    tmp = rho + (0.5 * h) * k2;
    rhs(tmp, o + o2 * (0.5 * h), c1, k3, o3);
    tmp = rho + h * k3;
    rhs(tmp, o + o3 * h, c2, k4, o4);

    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    o = o + (o1 + o2 * 2.0 + o3 * 2.0 + o4) * (h / 6.0);
    if ((n + 1) % opt.stride == 0) store(n + 1);
  }

  if (opt.ideal_reference) traj.fidelity = fidelity_vs_ideal(traj, p, *opt.ideal_reference);
  return traj;
}

/// Draws the realization for `run_index` of spec's seed stream, then propagates.
inline LeoTrajectory propagate_leo(const DensityState& rho0, const JCParams& p,
                                   const PulseSpec& spec, std::uint64_t run_index,
                                   const LeoOptions& opt) {
  return propagate_leo(rho0, p, PulseRealization::draw(spec, run_index, opt.T, opt.dt), opt);
}

/// Integrate only the (F1, F2) pair, storing every stride-th step.
inline std::vector<OOperatorState> integrate_o_operator(const JCParams& p,
                                                        const PulseRealization& pulse,
                                                        double T, double dt,
                                                        std::size_t stride = 1) {
  p.validate();
  check_pulse_alignment(pulse.spec(), dt);
  const std::size_t steps = detail::step_count(T, dt, "integrate_o_operator");
  std::vector<OOperatorState> out;
  out.reserve(steps / stride + 1);
  OOperatorState o{};
  out.push_back(o);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * dt;
    const double c0 = pulse.stage_value(t0, dt, 0.0);
    const double c1 = pulse.stage_value(t0, dt, 0.5);
    const double c2 = pulse.stage_value(t0, dt, 1.0);
    const auto a = o_operator_derivative(o, p, c0);
    const auto b = o_operator_derivative(o + a * (0.5 * dt), p, c1);
    const auto c = o_operator_derivative(o + b * (0.5 * dt), p, c1);
    const auto e = o_operator_derivative(o + c * dt, p, c2);
    o = o + (a + b * 2.0 + c * 2.0 + e) * (dt / 6.0);
    if ((n + 1) % stride == 0) out.push_back(o);
  }
  return out;
}

struct OperatorNorms {
  std::vector<double> abs_F1;
  std::vector<double> abs_F2;
};

inline OperatorNorms o_norm_series(const LeoTrajectory& traj) {
  OperatorNorms out;
  out.abs_F1.reserve(traj.o_states.size());
  out.abs_F2.reserve(traj.o_states.size());
  for (const auto& o : traj.o_states) {
    out.abs_F1.push_back(std::abs(o.F1));
    out.abs_F2.push_back(std::abs(o.F2));
  }
  return out;
}

inline std::vector<Complex> o_kernel_series(const LeoTrajectory& traj, const JCParams& p) {
  std::vector<Complex> out;
  out.reserve(traj.o_states.size());
  for (const auto& o : traj.o_states) out.push_back(o_kernel(o, p));
  return out;
}

struct FidelityBands {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

/// Runs n_runs jitter realizations of `spec` (run index 0..n_runs-1 of the
/// stream seeded by spec.seed) and reduces the fidelity series pointwise.
/// Runs may execute on `threads` workers; the result does not depend on it.
inline FidelityBands run_noisy_ensemble(const PulseSpec& spec, const JCParams& p,
                                        const DensityState& rho0, const ComplexVector& phi0,
                                        std::size_t n_runs, LeoOptions opt,
                                        unsigned threads = 0) {
  if (n_runs == 0) throw ValidationError("run_noisy_ensemble: n_runs must be >= 1");
  opt.ideal_reference = phi0;
  std::vector<std::vector<double>> per_run(n_runs);
  std::vector<double> times;

  auto work = [&](std::size_t run) {
    auto traj = propagate_leo(rho0, p, spec, run, opt);
    per_run[run] = std::move(traj.fidelity);
    if (run == 0) times = std::move(traj.times);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_runs));
  if (threads <= 1) {
    for (std::size_t r = 0; r < n_runs; ++r) work(r);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = w; r < n_runs; r += threads) work(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  FidelityBands bands;
  bands.times = std::move(times);
  const std::size_t n = bands.times.size();
  bands.mean.assign(n, 0.0);
  bands.min.assign(n, std::numeric_limits<double>::infinity());
  bands.max.assign(n, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < n_runs; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const double f = per_run[r][k];
      bands.mean[k] += f;
      bands.min[k] = std::min(bands.min[k], f);
      bands.max[k] = std::max(bands.max[k], f);
    }
  }
  for (auto& m : bands.mean) m /= static_cast<double>(n_runs);
  return bands;
}

}  // namespace jcctl
