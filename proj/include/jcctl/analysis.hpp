#pragma once

// Reduced-atom observables: Bloch vectors, the analytic amplitude g(t),
// trace-distance dynamics, quantum Fisher information and the
// non-Markovianity diagnostics built on them.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "jcctl/jc_model.hpp"
#include "jcctl/lindblad.hpp"
#include "jcctl/petz.hpp"
#include "jcctl/quantum_core.hpp"

namespace jcctl {

using Vector3 = Eigen::Vector3d;

/// rho_a = (1 + r . sigma) / 2 with sigma_z |e> = +|e>.
struct BlochState {
  Vector3 r = Vector3::Zero();

  double norm() const { return r.norm(); }
};

/// Pauli matrices in the library's (g, e) index order.
inline ComplexMatrix pauli(int axis) {
  const int g = static_cast<int>(Atom::ground), e = static_cast<int>(Atom::excited);
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  switch (axis) {
    case 0: s(e, g) = 1.0; s(g, e) = 1.0; break;
    case 1: s(e, g) = -kI; s(g, e) = kI; break;
    case 2: s(e, e) = 1.0; s(g, g) = -1.0; break;
    default: throw ValidationError("pauli: axis must be 0, 1 or 2");
  }
  return s;
}

inline BlochState bloch_vector(const ComplexMatrix& rho_a) {
  if (rho_a.rows() != 2 || rho_a.cols() != 2) {
    throw ValidationError("bloch_vector: expected a 2x2 atom state");
  }
  BlochState b;
  for (int k = 0; k < 3; ++k) b.r(k) = std::real((pauli(k) * rho_a).trace());
  if (b.norm() > 1.0 + 1e-9) throw ValidationError("bloch_vector: |r| exceeds 1");
  return b;
}

inline BlochState bloch_vector(const DensityState& rho_a) { return bloch_vector(rho_a.matrix()); }

inline ComplexMatrix assemble(const BlochState& b) {
  if (b.norm() > 1.0 + 1e-9) throw ValidationError("assemble: |r| exceeds 1");
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  for (int k = 0; k < 3; ++k) m += b.r(k) * pauli(k);
  return 0.5 * m;
}

struct AnalyticG {
  double lambda = 0.0;
  double kappa = 0.0;
  Complex a{0.0, 0.0};  // principal sqrt(lambda^4 - 16 kappa^2)

  AnalyticG(double lambda_, double kappa_) : lambda(lambda_), kappa(kappa_) {
    if (!std::isfinite(lambda) || !std::isfinite(kappa)) {
      throw ValidationError("analytic_g: non-finite lambda or kappa");
    }
    const double l2 = lambda * lambda;
    a = std::sqrt(Complex(l2 * l2 - 16.0 * kappa * kappa, 0.0));
  }

  /// g(t) = e^{-lambda^2 t/4} [lambda^2 sinh(a t/4)/a + cosh(a t/4)]
  Complex operator()(double t) const {
    const double l2 = lambda * lambda;
    const Complex z = a * (t / 4.0);
    // sinh(z)/z, by its series near the removable singularity
    Complex shc;
    if (std::abs(z) < 1e-3) {
      const Complex z2 = z * z;
      shc = 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
    } else {
      shc = std::sinh(z) / z;
    }
    return std::exp(-l2 * t / 4.0) * (l2 * (t / 4.0) * shc + std::cosh(z));
  }
};

inline Complex analytic_g(double t, double lambda, double kappa) {
  return AnalyticG(lambda, kappa)(t);
}

/// D(t) = |g(t)| on t_k = k dt, k = 0 .. n.
inline std::vector<double> optimal_pair_trace_distance(double lambda, double kappa, double dt,
                                                       std::size_t n) {
  const AnalyticG g(lambda, kappa);
  std::vector<double> out(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out[k] = std::abs(g(static_cast<double>(k) * dt));
  return out;
}

/// |psi(theta)> = cos(theta)|g0> + sin(theta)|e0>
inline ComplexVector theta_state(double theta, int n_max) {
  return std::cos(theta) * basis_ket(Atom::ground, 0, n_max) +
         std::sin(theta) * basis_ket(Atom::excited, 0, n_max);
}

/// Numeric D(t): trace distance between the reduced atom states of the pair
/// (|e0> + |g0>)/sqrt2, (|e0> - |g0>)/sqrt2 propagated under the model.
inline std::vector<double> optimal_pair_trace_distance_numeric(const LindbladModel& m, int n_max,
                                                               double tau, double dt) {
  const ComplexVector e0 = basis_ket(Atom::excited, 0, n_max);
  const ComplexVector g0 = basis_ket(Atom::ground, 0, n_max);
  const auto a = forward_propagate(DensityState::pure(e0 + g0), m, tau, dt);
  const auto b = forward_propagate(DensityState::pure(e0 - g0), m, tau, dt);
  std::vector<double> out(a.states.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = trace_distance(DensityState::trusted(partial_trace_cavity(a.states[k])),
                            DensityState::trusted(partial_trace_cavity(b.states[k])));
  }
  return out;
}

/// F = |dr|^2 + (r . dr)^2 / (1 - |r|^2). Near the sphere (1 - |r|^2 < 1e-9)
/// the second term is dropped when |r . dr| < 1e-9 and the input is rejected
/// otherwise.
inline double fisher_theta(const BlochState& b, const Vector3& dr) {
  const double r2 = b.r.squaredNorm();
  if (r2 > 1.0 + 2e-9) throw ValidationError("fisher_theta: |r| exceeds 1");
  const double first = dr.squaredNorm();
  const double rd = b.r.dot(dr);
  const double gap = 1.0 - r2;
  if (gap < 1e-9) {
    if (std::abs(rd) < 1e-9) return first;
    throw ValidationError("fisher_theta: r on the sphere with r.dr != 0 is inconsistent");
  }
  return first + rd * rd / gap;
}

/// F_theta at each index from reduced atom states propagated from theta + delta
/// and theta - delta.
inline std::vector<double> fisher_from_pair(const std::vector<ComplexMatrix>& plus,
                                            const std::vector<ComplexMatrix>& minus,
                                            double delta) {
  if (plus.size() != minus.size()) throw ValidationError("fisher_from_pair: length mismatch");
  std::vector<double> out(plus.size());
  for (std::size_t k = 0; k < plus.size(); ++k) {
    const Vector3 rp = bloch_vector(plus[k]).r;
    const Vector3 rm = bloch_vector(minus[k]).r;
    BlochState mid{0.5 * (rp + rm)};
    out[k] = fisher_theta(mid, (rp - rm) / (2.0 * delta));
  }
  return out;
}

struct FisherTrajectory {
  double dt = 0.0;
  std::vector<double> forward;   // F_theta(t), t in [0, tau]
  std::vector<double> reversal;  // F_theta(tau + t'), t' in [0, tau]; empty if not requested
};

struct FisherOptions {
  double delta_theta = 1e-5;
  bool with_reversal = false;
  ReverseOptions reverse{};
};

/// Propagates the theta +/- delta initial states (concurrently) and reduces
/// each to the atom.
inline FisherTrajectory fisher_trajectory(const LindbladModel& m, int n_max, double theta,
                                          double tau, double dt, const FisherOptions& opt = {}) {
  if (!(opt.delta_theta > 0.0)) throw ValidationError("fisher_trajectory: delta_theta must be > 0");
  struct Reduced {
    std::vector<ComplexMatrix> fwd, bwd;
  };
  auto run = [&](double th) {
    Reduced r;
    const auto traj = forward_propagate(DensityState::pure(theta_state(th, n_max)), m, tau, dt);
    r.fwd.reserve(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      r.fwd.push_back(partial_trace_cavity(traj.states[k]));
    }
    if (opt.with_reversal) {
      const auto back = reverse_propagate(traj, m, opt.reverse);
      for (const auto& s : back.states) r.bwd.push_back(partial_trace_cavity(s.matrix()));
    }
    return r;
  };
  auto plus_future = std::async(std::launch::async, run, theta + opt.delta_theta);
  const Reduced minus = run(theta - opt.delta_theta);
  const Reduced plus = plus_future.get();

  FisherTrajectory out;
  out.dt = dt;
  out.forward = fisher_from_pair(plus.fwd, minus.fwd, opt.delta_theta);
  if (opt.with_reversal) out.reversal = fisher_from_pair(plus.bwd, minus.bwd, opt.delta_theta);
  return out;
}

namespace detail {

/// Value of the extremum near sample k of a uniformly sampled series. Kinks
/// (|g| at a zero of g) are located by intersecting the secant lines on
/// either side; smooth extrema by the parabola through k-1, k, k+1.
inline double extremum_value(const std::vector<double>& x, std::size_t k) {
  const std::size_t n = x.size();
  if (k < 3 || k + 3 >= n) return x[k];
  auto d2 = [&x](std::size_t j) { return x[j + 1] - 2.0 * x[j] + x[j - 1]; };
  const double near = std::max({std::abs(d2(k - 1)), std::abs(d2(k)), std::abs(d2(k + 1))});
  const double far = std::max(std::abs(d2(k - 2)), std::abs(d2(k + 2)));
  if (near > 10.0 * far && near > 0.0) {
    const double sl = x[k - 1] - x[k - 2];
    const double sr = x[k + 2] - x[k + 1];
    if (sl == sr) return x[k];
    const double u = (x[k + 1] - x[k - 1] - sr - sl) / (sl - sr);
    return std::abs(u) <= 1.5 ? x[k - 1] + sl * (u + 1.0) : x[k];
  }
  const double a = 0.5 * d2(k);
  const double b = 0.5 * (x[k + 1] - x[k - 1]);
  if (a == 0.0) return x[k];
  const double u = -b / (2.0 * a);
  return std::abs(u) <= 1.0 ? x[k] - b * b / (4.0 * a) : x[k];
}

}  // namespace detail

/// Integral of the positive part of dD/dt: over each maximal run of
/// increments steeper than slope_tol, the rise from its trough to its peak.
/// Interior extrema are refined beyond the sample values so the result does
/// not depend on dt to leading order.
inline double nonmarkov_measure(const std::vector<double>& D, double dt,
                                double slope_tol = 1e-6) {
  if (!(dt > 0.0)) throw ValidationError("nonmarkov_measure: dt must be > 0");
  double total = 0.0;
  std::size_t k = 0;
  while (k + 1 < D.size()) {
    if (D[k + 1] - D[k] <= slope_tol * dt) {
      ++k;
      continue;
    }
    const std::size_t start = k;
    while (k + 1 < D.size() && D[k + 1] - D[k] > slope_tol * dt) ++k;
    total += std::max(0.0, detail::extremum_value(D, k) - detail::extremum_value(D, start));
  }
  return total;
}

/// Central-difference slope of a uniformly sampled series (one-sided at the
/// ends).
inline std::vector<double> series_slope(const std::vector<double>& x, double dt) {
  const std::size_t n = x.size();
  std::vector<double> s(n, 0.0);
  if (n < 2) return s;
  s[0] = (x[1] - x[0]) / dt;
  s[n - 1] = (x[n - 1] - x[n - 2]) / dt;
  for (std::size_t k = 1; k + 1 < n; ++k) s[k] = (x[k + 1] - x[k - 1]) / (2.0 * dt);
  return s;
}

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

/// Maximal runs of samples whose slope exceeds slope_tol, as (first, last)
/// sample times.
inline std::vector<Interval> increasing_intervals(const std::vector<double>& x, double dt,
                                                  double slope_tol = 1e-6) {
  if (!(dt > 0.0)) throw ValidationError("increasing_intervals: dt must be > 0");
  const auto s = series_slope(x, dt);
  std::vector<Interval> out;
  std::optional<std::size_t> open;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] > slope_tol) {
      if (!open) open = k;
    } else if (open) {
      out.push_back({static_cast<double>(*open) * dt, static_cast<double>(k - 1) * dt});
      open.reset();
    }
  }
  if (open) out.push_back({static_cast<double>(*open) * dt, static_cast<double>(s.size() - 1) * dt});
  return out;
}

/// Intervals where the trace distance D grows, i.e. the dynamics are
/// non-contractive.
inline std::vector<Interval> noncontractive_intervals(const std::vector<double>& D, double dt,
                                                      double slope_tol = 1e-6) {
  return increasing_intervals(D, dt, slope_tol);
}

/// True when both lists have the same length and every endpoint pair differs
/// by at most `tolerance`.
inline bool intervals_match(const std::vector<Interval>& a, const std::vector<Interval>& b,
                            double tolerance) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].start - b[i].start) > tolerance + 1e-12 ||
        std::abs(a[i].end - b[i].end) > tolerance + 1e-12) {
      return false;
    }
  }
  return true;
}

}  // namespace jcctl
