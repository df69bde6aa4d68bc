#pragma once

// Independent route to (F1, F2): march the fixed-s columns f_i(t, s) of
//
//   d_t f1 = [i kappa + lambda F1(t)] f2 + i omega f1
//   d_t f2 = i [kappa f1 + (omega_c - 2 c(t)) f2] + lambda F2(t) f2
//   f1(s, s) = 0,  f2(s, s) = lambda
//
// forward in t, with F_i(t) = int_0^t alpha(t, s) f_i(t, s) ds evaluated by
// trapezoid quadrature over the column start nodes and the moving endpoint.
//
// All columns obey the same linear ODE, so one RK4 step acts on every column
// through the same 2x2 stage matrices. The march therefore advances a 2x2
// propagator across each s-interval and applies it to the stored columns at
// the interval end; stage values of F are the quadrature of the stage
// columns, written through that propagator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "jcctl/jc_model.hpp"
#include "jcctl/leo_qsd.hpp"
#include "jcctl/pulse.hpp"

namespace jcctl {

/// Column values f1(t, s_j), f2(t, s_j) at one time t for nodes s_j = j ds.
struct OGrid {
  double t = 0.0;
  double ds = 0.0;
  std::vector<double> s_nodes;
  std::vector<Complex> f1;
  std::vector<Complex> f2;
};

struct OGridSolution {
  std::vector<double> times;      // s nodes, 0 .. T
  std::vector<OOperatorState> F;  // F at each node
  OGrid final_columns;
};

namespace detail {

struct Mat2 {
  Complex a, b, c, d;  // [[a, b], [c, d]]

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
};

struct Vec2 {
  Complex x, y;
};

inline Vec2 apply(const Mat2& m, const Vec2& v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

}  // namespace detail

/// Single-resolution grid solve with column spacing ds and `substeps` RK4
/// steps in t per column interval. The t step ds / substeps must keep square
/// pulse edges on step boundaries.
inline OGridSolution solve_o_operator_grid(const JCParams& p, const PulseRealization& pulse,
                                           double T, double ds, std::size_t substeps = 1) {
  using detail::Mat2;
  using detail::Vec2;
  p.validate();
  if (substeps == 0) throw ValidationError("solve_o_operator_grid: substeps must be >= 1");
  const std::size_t n = detail::step_count(T, ds, "solve_o_operator_grid");
  const double h = ds / static_cast<double>(substeps);
  check_pulse_alignment(pulse.spec(), h);

  const Complex ge = p.gamma_eff();
  const double half_gamma = 0.5 * p.gamma;
  const Vec2 boundary{0.0, p.lambda};
  const Complex step_decay = std::exp(-ge * ds);

  // Columns are stored weighted by the kernel, u_j = alpha(t, s_j) f_j(t),
  // split into real and imaginary parts so the sweep vectorizes.
  std::vector<double> u1r(n + 1, 0.0), u1i(n + 1, 0.0), u2r(n + 1, 0.0), u2i(n + 1, 0.0);
  u2r[0] = half_gamma * p.lambda;

  OGridSolution sol;
  sol.times.reserve(n + 1);
  sol.F.reserve(n + 1);
  sol.times.push_back(0.0);
  sol.F.push_back({});

  // S = sum_{j<J} w_j u_j(t_J) with trapezoid weights (w_0 = ds/2)
  Complex S1 = 0.0, S2 = 0.0;

  for (std::size_t J = 0; J < n; ++J) {
    const double node_weight = J >= 1 ? 0.5 * ds : 0.0;
    const double tJ = static_cast<double>(J) * ds;

    // F at offset delta into the interval, for stage propagator phi.
    auto quadrature = [&](const Mat2& phi, double delta) -> OOperatorState {
      const double wJ = node_weight + 0.5 * delta;
      const Vec2 v{S1 + wJ * half_gamma * boundary.x, S2 + wJ * half_gamma * boundary.y};
      const Vec2 pv = apply(phi, v);
      const Complex e = std::exp(-ge * delta);
      return {e * pv.x + 0.5 * delta * half_gamma * boundary.x,
              e * pv.y + 0.5 * delta * half_gamma * boundary.y};
    };
    auto coefficient = [&](const OOperatorState& F, double c) -> Mat2 {
      return {kI * p.omega, kI * p.kappa + p.lambda * F.F1, kI * p.kappa,
              kI * (p.omega_c - 2.0 * c) + p.lambda * F.F2};
    };

    Mat2 phi = Mat2::identity();
    for (std::size_t q = 0; q < substeps; ++q) {
      const double d0 = static_cast<double>(q) * h;
      const double t0 = tJ + d0;
      const double c0 = pulse.stage_value(t0, h, 0.0);
      const double c1 = pulse.stage_value(t0, h, 0.5);
      const double c2 = pulse.stage_value(t0, h, 1.0);
      const Mat2 k1 = coefficient(quadrature(phi, d0), c0) * phi;
      const Mat2 p2 = phi + k1 * (0.5 * h);
      const Mat2 k2 = coefficient(quadrature(p2, d0 + 0.5 * h), c1) * p2;
      const Mat2 p3 = phi + k2 * (0.5 * h);
      const Mat2 k3 = coefficient(quadrature(p3, d0 + 0.5 * h), c1) * p3;
      const Mat2 p4 = phi + k3 * h;
      const Mat2 k4 = coefficient(quadrature(p4, d0 + h), c2) * p4;
      phi = phi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }

    // Advance every column across the interval, including the kernel decay,
    // and accumulate the plain sum for the next trapezoid.
    const Complex ea = step_decay * phi.a, eb = step_decay * phi.b;
    const Complex ec = step_decay * phi.c, ed = step_decay * phi.d;
    const double ar = ea.real(), ai = ea.imag(), br = eb.real(), bi = eb.imag();
    const double cr = ec.real(), ci = ec.imag(), dr = ed.real(), di = ed.imag();
    double s1r = 0.0, s1i = 0.0, s2r = 0.0, s2i = 0.0;
    for (std::size_t j = 0; j <= J; ++j) {
      const double xr = u1r[j], xi = u1i[j], yr = u2r[j], yi = u2i[j];
      const double n1r = ar * xr - ai * xi + br * yr - bi * yi;
      const double n1i = ar * xi + ai * xr + br * yi + bi * yr;
      const double n2r = cr * xr - ci * xi + dr * yr - di * yi;
      const double n2i = cr * xi + ci * xr + dr * yi + di * yr;
      u1r[j] = n1r;
      u1i[j] = n1i;
      u2r[j] = n2r;
      u2i[j] = n2i;
      s1r += n1r;
      s1i += n1i;
      s2r += n2r;
      s2i += n2i;
    }
    const std::size_t last = J + 1;
    u1r[last] = half_gamma * boundary.x.real();
    u1i[last] = 0.0;
    u2r[last] = half_gamma * boundary.y.real();
    u2i[last] = 0.0;

    // trapezoid over nodes 0..last
    S1 = ds * (Complex(s1r, s1i) - 0.5 * Complex(u1r[0], u1i[0]));
    S2 = ds * (Complex(s2r, s2i) - 0.5 * Complex(u2r[0], u2i[0]));
    const Complex F1 = S1 + 0.5 * ds * Complex(u1r[last], u1i[last]);
    const Complex F2 = S2 + 0.5 * ds * Complex(u2r[last], u2i[last]);
    sol.times.push_back(static_cast<double>(last) * ds);
    sol.F.push_back({F1, F2});
  }

  // unweight the final columns: f_j(T) = u_j / alpha(T, s_j)
  auto& g = sol.final_columns;
  g.t = T;
  g.ds = ds;
  g.s_nodes.resize(n + 1);
  g.f1.resize(n + 1);
  g.f2.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    g.s_nodes[j] = static_cast<double>(j) * ds;
    const Complex alpha = half_gamma * std::exp(-ge * (T - g.s_nodes[j]));
    g.f1[j] = Complex(u1r[j], u1i[j]) / alpha;
    g.f2[j] = Complex(u2r[j], u2i[j]) / alpha;
  }
  return sol;
}

struct RefinedOGrid {
  std::vector<double> times;      // nodes of the coarsest level
  std::vector<OOperatorState> F;  // Richardson-extrapolated values
  std::vector<double> column_spacings;
  double last_change = 0.0;  // max |R_k - R_{k-1}| between the last two levels
  bool converged = false;
};

/// Halve ds from ds0 until two successive Richardson-extrapolated
/// (trapezoid error ~ ds^2) solutions differ by less than `tol` at every
/// coarse node, or `max_levels` resolutions have been used.
inline RefinedOGrid solve_o_operator_grid_refined(const JCParams& p,
                                                  const PulseRealization& pulse, double T,
                                                  double ds0 = 1e-3, double t_step = 1e-4,
                                                  double tol = 1e-7, std::size_t max_levels = 4) {
  if (max_levels < 3) throw ValidationError("grid refinement needs at least three levels");
  RefinedOGrid out;
  std::vector<OOperatorState> prev_level, prev_extrap;
  const std::size_t coarse = detail::step_count(T, ds0, "solve_o_operator_grid_refined");

  for (std::size_t level = 0; level < max_levels; ++level) {
    const std::size_t factor = std::size_t{1} << level;
    const double ds = ds0 / static_cast<double>(factor);
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::round(ds / t_step)));
    auto sol = solve_o_operator_grid(p, pulse, T, ds, substeps);
    out.column_spacings.push_back(ds);

    std::vector<OOperatorState> sampled(coarse + 1);
    for (std::size_t k = 0; k <= coarse; ++k) sampled[k] = sol.F[k * factor];
    if (level == 0) {
      out.times.resize(coarse + 1);
      for (std::size_t k = 0; k <= coarse; ++k) out.times[k] = static_cast<double>(k) * ds0;
    } else {
      std::vector<OOperatorState> extrap(coarse + 1);
      for (std::size_t k = 0; k <= coarse; ++k) {
        extrap[k] = {(4.0 * sampled[k].F1 - prev_level[k].F1) / 3.0,
                     (4.0 * sampled[k].F2 - prev_level[k].F2) / 3.0};
      }
      if (!prev_extrap.empty()) {
        double change = 0.0;
        for (std::size_t k = 0; k <= coarse; ++k) {
          change = std::max({change, std::abs(extrap[k].F1 - prev_extrap[k].F1),
                             std::abs(extrap[k].F2 - prev_extrap[k].F2)});
        }
        out.last_change = change;
        out.F = extrap;
        if (change < tol) {
          out.converged = true;
          return out;
        }
      }
      prev_extrap = std::move(extrap);
    }
    prev_level = std::move(sampled);
  }
  return out;
}

}  // namespace jcctl
