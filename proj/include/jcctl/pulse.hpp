#pragma once

// LEO control fields c(t): ideal square and sine-squared waves, and jittered
// realizations of them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jcctl/types.hpp"

namespace jcctl {

enum class PulseKind { none, square, sine_squared };

inline std::string_view to_string(PulseKind k) {
  switch (k) {
    case PulseKind::none: return "none";
    case PulseKind::square: return "square";
    case PulseKind::sine_squared: return "sine_squared";
  }
  return "none";
}

inline PulseKind parse_pulse_kind(std::string_view s) {
  if (s == "none") return PulseKind::none;
  if (s == "square") return PulseKind::square;
  if (s == "sine_squared") return PulseKind::sine_squared;
  throw ValidationError("unknown pulse kind '" + std::string(s) +
                        "' (expected none, square or sine_squared)");
}

struct PulseSpec {
  PulseKind kind = PulseKind::none;
  double amplitude = 0.0;
  double tau_c = 0.1;                          // square wave period
  double omega_p = 10.0 * std::numbers::pi;    // sine-squared angular frequency
  double jitter_fraction = 0.0;
  std::uint64_t seed = 1;

  /// Period of c(t); 0 for kind none.
  double period() const {
    switch (kind) {
      case PulseKind::square: return tau_c;
      case PulseKind::sine_squared: return std::numbers::pi / omega_p;
      case PulseKind::none: return 0.0;
    }
    return 0.0;
  }

  void validate() const {
    if (!std::isfinite(amplitude)) throw ValidationError("pulse: non-finite amplitude");
    if (kind == PulseKind::square && !(tau_c > 0.0)) {
      throw ValidationError("pulse: square wave needs tau_c > 0");
    }
    if (kind == PulseKind::sine_squared && !(omega_p > 0.0)) {
      throw ValidationError("pulse: sine_squared wave needs omega_p > 0");
    }
    if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0)) {
      throw ValidationError("pulse: jitter_fraction must lie in [0, 1)");
    }
  }

  static PulseSpec square(double amplitude, double tau_c) {
    PulseSpec s;
    s.kind = PulseKind::square;
    s.amplitude = amplitude;
    s.tau_c = tau_c;
    return s;
  }

  static PulseSpec sine_squared(double amplitude, double omega_p) {
    PulseSpec s;
    s.kind = PulseKind::sine_squared;
    s.amplitude = amplitude;
    s.omega_p = omega_p;
    return s;
  }
};

/// True when `step` divides `interval` to within relative 1e-9.
inline bool divides(double interval, double step) {
  if (!(step > 0.0) || !(interval > 0.0)) return false;
  const double q = interval / step;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q) && std::round(q) >= 1.0;
}

/// Square-wave edges must land on step boundaries: dt divides tau_c / 2.
inline void check_pulse_alignment(const PulseSpec& spec, double dt) {
  if (spec.kind == PulseKind::square && !divides(0.5 * spec.tau_c, dt)) {
    std::ostringstream os;
    os << "dt = " << dt << " does not divide tau_c/2 = " << 0.5 * spec.tau_c
       << " (square-wave edges must fall on step boundaries)";
    throw ValidationError(os.str());
  }
}

/// One concrete control field. Ideal realizations are evaluated in closed
/// form; jittered ones carry per-period amplitudes and, for square waves,
/// per-period edge positions drawn once at construction.
class PulseRealization {
 public:
  PulseRealization() = default;

  static PulseRealization ideal(const PulseSpec& spec) {
    spec.validate();
    PulseRealization r;
    r.spec_ = spec;
    return r;
  }

  /// Draw the jitter for run `run_index` of the stream seeded by spec.seed,
  /// covering [0, horizon]. Square-wave edges are rounded to multiples of
  /// grid_dt when grid_dt > 0 so they stay on step boundaries.
  static PulseRealization draw(const PulseSpec& spec, std::uint64_t run_index,
                               double horizon, double grid_dt) {
    spec.validate();
    PulseRealization r;
    r.spec_ = spec;
    if (spec.kind == PulseKind::none || spec.jitter_fraction == 0.0) return r;
    r.jittered_ = true;

    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                      static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(run_index),
                      static_cast<std::uint32_t>(run_index >> 32)};
    std::mt19937_64 gen(seq);
    // [-1, 1) from the top 53 bits; independent of the standard library's
    // distribution implementations.
    auto symmetric = [&gen] {
      return 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
    };
    const double j = spec.jitter_fraction;
    const double period = spec.period();
    const auto periods = static_cast<std::size_t>(std::ceil(horizon / period)) + 2;

    if (spec.kind == PulseKind::square) {
      auto snap = [grid_dt](double x) {
        return grid_dt > 0.0 ? std::round(x / grid_dt) * grid_dt : x;
      };
      r.amp_.resize(periods);
      r.rise_.resize(periods);
      r.fall_.resize(periods);
      for (std::size_t k = 0; k < periods; ++k) {
        const double kd = static_cast<double>(k);
        r.amp_[k] = spec.amplitude * (1.0 + j * symmetric());
        r.rise_[k] = snap((kd + 0.5) * period + j * period * symmetric());
        r.fall_[k] = snap((kd + 1.0) * period + j * period * symmetric());
      }
    } else {
      r.phase_offset_ = j * (2.0 * std::numbers::pi / spec.omega_p) * symmetric();
      // index 0 holds the period that starts before t = 0
      r.amp_.resize(periods + 1);
      for (auto& a : r.amp_) a = spec.amplitude * (1.0 + j * symmetric());
    }
    return r;
  }

  const PulseSpec& spec() const noexcept { return spec_; }
  bool jittered() const noexcept { return jittered_; }

  double value(double t) const {
    switch (spec_.kind) {
      case PulseKind::none: return 0.0;
      case PulseKind::square: return jittered_ ? jittered_square(t) : ideal_square(t);
      case PulseKind::sine_squared: return sine_squared(t);
    }
    return 0.0;
  }

  /// Control value used at an integrator stage `fraction` of the step
  /// [step_start, step_start + h]. Square waves are piecewise constant between
  /// step boundaries, so every stage uses the step-midpoint value.
  double stage_value(double step_start, double h, double fraction) const {
    if (spec_.kind == PulseKind::square) return value(step_start + 0.5 * h);
    return value(step_start + fraction * h);
  }

 private:
  double ideal_square(double t) const {
    const double x = t / spec_.tau_c;
    return x - std::floor(x) >= 0.5 ? spec_.amplitude : 0.0;
  }

  double jittered_square(double t) const {
    const auto k = static_cast<std::ptrdiff_t>(std::floor(t / spec_.tau_c));
    if (k + 1 >= static_cast<std::ptrdiff_t>(amp_.size())) {
      throw ValidationError("pulse realization evaluated beyond its drawn horizon");
    }
    for (std::ptrdiff_t kk = k - 1; kk <= k; ++kk) {
      if (kk < 0) continue;
      const auto i = static_cast<std::size_t>(kk);
      if (t >= rise_[i] && t < fall_[i]) return amp_[i];
    }
    return 0.0;
  }

  double sine_squared(double t) const {
    const double shifted = t - phase_offset_;
    const double s = std::sin(spec_.omega_p * shifted);
    double amp = spec_.amplitude;
    if (jittered_) {
      const auto k = static_cast<std::ptrdiff_t>(
                         std::floor(shifted * spec_.omega_p / std::numbers::pi)) + 1;
      if (k < 0 || k >= static_cast<std::ptrdiff_t>(amp_.size())) {
        throw ValidationError("pulse realization evaluated beyond its drawn horizon");
      }
      amp = amp_[static_cast<std::size_t>(k)];
    }
    return amp * s * s;
  }

  PulseSpec spec_{};
  bool jittered_ = false;
  std::vector<double> amp_;
  std::vector<double> rise_;
  std::vector<double> fall_;
  double phase_offset_ = 0.0;
};

inline double sample_pulse(const PulseSpec& spec, double t, const PulseRealization& r) {
  if (r.spec().kind != spec.kind) {
    throw ValidationError("sample_pulse: realization was drawn for a different pulse kind");
  }
  return r.value(t);
}

}  // namespace jcctl
