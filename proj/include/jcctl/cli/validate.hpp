#pragma once

// Cross-checks between independent numerical routes, run by the `validate`
// scenario and subcommand.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jcctl/analysis.hpp"
#include "jcctl/leo_qsd.hpp"
#include "jcctl/lindblad.hpp"
#include "jcctl/o_grid.hpp"
#include "jcctl/petz.hpp"

namespace jcctl::cli {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline ComplexMatrix random_matrix(std::mt19937_64& gen, Eigen::Index d) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(n(gen), n(gen));
  return m;
}

inline DensityState random_density(std::mt19937_64& gen, Eigen::Index d) {
  const ComplexMatrix a = random_matrix(gen, d);
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  return DensityState(0.5 * (rho + rho.adjoint()));
}

/// Complete Kraus set: random operators K_k, rescaled by S^{-1/2} with
/// S = sum_k K_k^dag K_k.
inline std::vector<ComplexMatrix> random_channel(std::mt19937_64& gen, Eigen::Index d,
                                                 int n_kraus) {
  std::vector<ComplexMatrix> ks;
  ComplexMatrix s = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < n_kraus; ++k) {
    ks.push_back(random_matrix(gen, d));
    s += ks.back().adjoint() * ks.back();
  }
  const ComplexMatrix w = pinv_sqrt(0.5 * (s + s.adjoint()), 0.0);
  for (auto& k : ks) k = k * w;
  return ks;
}

/// Fisher information of rho(theta) = (1 + r.sigma)/2 from the symmetric
/// logarithmic derivative in the eigenbasis of rho.
inline double fisher_sld(const Vector3& r, const Vector3& dr) {
  const ComplexMatrix rho = assemble(BlochState{r});
  ComplexMatrix drho = ComplexMatrix::Zero(2, 2);
  for (int k = 0; k < 3; ++k) drho += 0.5 * dr(k) * pauli(k);
  const auto eig = hermitian_eig(rho);
  const ComplexMatrix db = eig.eigenvectors.adjoint() * drho * eig.eigenvectors;
  double f = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double s = eig.eigenvalues(i) + eig.eigenvalues(j);
      if (s > 1e-14) f += 2.0 * std::norm(db(i, j)) / s;
    }
  return f;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) e = std::max(e, std::abs(a[k] - b[k]));
  return e;
}

}  // namespace detail

/// Runs every cross-check. `quick` shortens the time horizons.
inline std::vector<CheckResult> run_validation(bool quick) {
  using namespace detail;
  std::vector<CheckResult> out;
  auto check = [&out](std::string name, double value, double tol) {
    out.push_back({std::move(name), value, tol, value <= tol});
  };
  std::mt19937_64 gen(20240611);

  // master equation vs explicit superoperator
  {
    JCParams p;
    p.kappa = 0.6;
    p.lambda = 0.75;
    const auto m = jc_lindblad_model(p);
    const ComplexMatrix S = lindblad_superoperator(m);
    double err = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = random_density(gen, p.dim());
      const ComplexMatrix d = lindblad_derivative(rho, m);
      const ComplexVector v = S * rho.matrix().reshaped();
      err = std::max(err, (v - d.reshaped()).cwiseAbs().maxCoeff());
    }
    check("lindblad_vs_superoperator", err, 1e-12);
  }

  // closed (F1, F2) ODE vs the two-time grid
  {
    const JCParams p;
    const double T = quick ? 1.0 : 10.0;
    for (const auto& spec : {PulseSpec{}, PulseSpec::square(100.0, 0.1)}) {
      const auto pulse = PulseRealization::ideal(spec);
      const auto ode = integrate_o_operator(p, pulse, T, 1e-4, 10);
      const auto grid = solve_o_operator_grid_refined(p, pulse, T);
      double err = 0.0;
      for (std::size_t k = 0; k < grid.F.size(); ++k) {
        err = std::max({err, std::abs(ode[k].F1 - grid.F[k].F1), std::abs(ode[k].F2 - grid.F[k].F2)});
      }
      check(std::string("o_operator_ode_vs_grid_") + std::string(to_string(spec.kind)), err, 1e-6);
    }
  }

  // Petz map recovers its reference state
  {
    double err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto rho0 = random_density(gen, 4);
      const auto ks = random_channel(gen, 4, 3);
      const auto sigma = DensityState(apply_channel(ks, rho0.matrix()), Tolerances{1e-10, 1e-10, 1e-9, -1e-9});
      const auto back = petz_map_apply(rho0, ks, sigma);
      err = std::max(err, (back.matrix() - rho0.matrix()).cwiseAbs().maxCoeff());
    }
    check("petz_map_recovers_reference", err, 1e-10);
  }

  // Petz reversal: Kraus composition vs the reversal master equation
  JCParams pp;
  pp.kappa = 0.6;
  pp.lambda = 0.75;
  const auto model = jc_lindblad_model(pp);
  const auto plus = DensityState::pure(protected_plus_state(pp.n_max));
  {
    const double dt = 1e-2;
    const auto fwd = forward_propagate(plus, model, 1.0, dt);
    const auto back = reverse_propagate(fwd, model);
    const auto composed = composed_petz_reversal(plus, lindblad_step_kraus(model, dt), fwd.steps());
    double err = 0.0;
    for (std::size_t j = 0; j < composed.size(); ++j) {
      err = std::max(err, trace_distance(composed[j], back.states[j]));
    }
    check("kraus_petz_vs_reverse_propagate", err, 5.0 * dt);
  }

  // reversal error and its stability in the support cutoff
  const double tau = quick ? 2.0 : 10.0;
  const double dt = 1e-3;
  {
    const auto fwd = forward_propagate(plus, model, tau, dt);
    std::vector<double> errs;
    for (double eps : {1e-8, 1e-12}) {
      ReverseOptions o;
      o.epsilon = eps;
      const auto back = reverse_propagate(fwd, model, o);
      double e = 0.0;
      for (std::size_t j = 0; j <= fwd.steps(); ++j) {
        e = std::max(e, trace_distance(back.states[j], fwd.state(fwd.steps() - j)));
      }
      errs.push_back(e);
    }
    check("reversal_error_eps_1e-8", errs[0], 1e-3);
    check("reversal_error_eps_1e-12", errs[1], 1e-3);
    const double ratio = std::max(errs[0], errs[1]) / std::max(std::min(errs[0], errs[1]), 1e-300);
    check("reversal_error_cutoff_ratio", ratio, 10.0);
  }

  // reduced-atom dynamics vs the analytic amplitude
  {
    const std::size_t n = static_cast<std::size_t>(std::llround(tau / dt));
    const auto num = optimal_pair_trace_distance_numeric(model, pp.n_max, tau, dt);
    const auto ana = optimal_pair_trace_distance(pp.lambda, pp.kappa, dt, n);
    check("optimal_pair_trace_distance_vs_abs_g", max_abs_diff(num, ana), 1e-4);

    FisherOptions fo;
    fo.with_reversal = true;
    const auto F = fisher_trajectory(model, pp.n_max, std::numbers::pi / 4.0, tau, dt, fo);
    std::vector<double> four_g2(n + 1);
    for (std::size_t k = 0; k <= n; ++k) four_g2[k] = 4.0 * ana[k] * ana[k];
    check("fisher_vs_4g2", max_abs_diff(F.forward, four_g2), 1e-3);
    std::vector<double> mirrored(F.forward.rbegin(), F.forward.rend());
    check("fisher_reversal_mirror", max_abs_diff(F.reversal, mirrored), 2e-3);
  }

  // Bloch-vector Fisher formula vs the symmetric logarithmic derivative
  {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      Vector3 r(u(gen), u(gen), u(gen));
      r *= 0.95 * std::abs(u(gen)) / std::max(r.norm(), 1e-12);
      const Vector3 dr(u(gen), u(gen), u(gen));
      err = std::max(err, std::abs(fisher_theta(BlochState{r}, dr) - fisher_sld(r, dr)));
    }
    check("fisher_theta_vs_sld", err, 1e-10);
  }

  // lambda = 0: LEO dynamics are unitary
  {
    JCParams p;
    p.lambda = 0.0;
    LeoOptions opt;
    opt.T = quick ? 1.0 : 10.0;
    const auto rho0 = DensityState::pure(protected_plus_state(p.n_max));
    const auto traj = propagate_leo(rho0, p, PulseRealization::ideal(PulseSpec{}), opt);
    const ComplexMatrix H = build_system_hamiltonian(p);
    double err = 0.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const ComplexMatrix U = unitary_propagator(H, traj.times[k]);
      err = std::max(err, (traj.states[k].matrix() - U * rho0.matrix() * U.adjoint()).cwiseAbs().maxCoeff());
    }
    check("leo_lambda0_vs_unitary", err, 1e-9);
  }
  return out;
}

}  // namespace jcctl::cli
