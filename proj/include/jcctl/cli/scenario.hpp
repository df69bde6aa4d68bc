#pragma once

// Scenario runner: executes one configured scenario and writes
// <scenario>.csv and <scenario>.summary.json into the output directory.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "jcctl/analysis.hpp"
#include "jcctl/cli/config.hpp"
#include "jcctl/cli/validate.hpp"
#include "jcctl/leo_qsd.hpp"
#include "jcctl/lindblad.hpp"
#include "jcctl/petz.hpp"

namespace jcctl::cli {

enum ExitCode : int { kSuccess = 0, kLoadError = 1, kNumericalFailure = 2 };

struct RunResult {
  int exit_code = kSuccess;
  json summary;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

/// Minimal CSV writer: header row, then rows of %.12g numbers.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary), width_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != width_) throw std::logic_error("CsvWriter: row width mismatch");
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g", values[i]);
      if (i) out_ << ',';
      out_ << buf;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

namespace detail {

inline double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }
inline double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline bool inside(const std::vector<Interval>& iv, double t) {
  for (const auto& i : iv)
    if (t >= i.start - 1e-12 && t <= i.end + 1e-12) return true;
  return false;
}

inline json intervals_json(const std::vector<Interval>& iv) {
  json a = json::array();
  for (const auto& i : iv) a.push_back({i.start, i.end});
  return a;
}

inline std::size_t steps_of(const ScenarioConfig& c) {
  return static_cast<std::size_t>(std::llround(c.T / c.dt));
}

inline std::vector<double> bloch_row(const ComplexMatrix& rho) {
  const Vector3 r = bloch_vector(partial_trace_cavity(rho)).r;
  return {r(0), r(1), r(2)};
}

inline json run_leo_fidelity(const ScenarioConfig& c, CsvWriter& csv) {
  const ComplexVector phi0 = initial_state_vector(c);
  const auto rho0 = DensityState::pure(phi0);
  LeoOptions opt;
  opt.T = c.T;
  opt.dt = c.dt;
  opt.stride = c.stride;
  opt.ideal_reference = phi0;

  const auto square = propagate_leo(
      rho0, c.params, PulseRealization::ideal(PulseSpec::square(c.pulse.amplitude, c.pulse.tau_c)), opt);
  const auto sine = propagate_leo(
      rho0, c.params,
      PulseRealization::ideal(PulseSpec::sine_squared(c.pulse.amplitude, c.pulse.omega_p)), opt);
  const auto bare = propagate_leo(rho0, c.params, PulseRealization::ideal(PulseSpec{}), opt);
  const auto bands = run_noisy_ensemble(c.pulse, c.params, rho0, phi0, c.n_runs, opt);

  for (std::size_t k = 0; k < square.times.size(); ++k) {
    csv.row({square.times[k], square.fidelity[k], sine.fidelity[k], bands.mean[k], bands.min[k],
             bands.max[k], bare.fidelity[k]});
  }
  json s;
  s["min_fidelity_square"] = min_of(square.fidelity);
  s["min_fidelity_sine2"] = min_of(sine.fidelity);
  s["min_fidelity_controlled"] = std::min(min_of(square.fidelity), min_of(sine.fidelity));
  s["min_fidelity_uncontrolled"] = min_of(bare.fidelity);
  s["mean_fidelity_noisy"] = mean_of(bands.mean);
  s["min_mean_fidelity_noisy"] = min_of(bands.mean);
  s["min_band_fidelity_noisy"] = min_of(bands.min);
  s["noisy_pulse_kind"] = std::string(to_string(c.pulse.kind));
  s["n_runs"] = c.n_runs;
  s["seed"] = c.seed;
  return s;
}

inline json run_leo_onorm(const ScenarioConfig& c, CsvWriter& csv) {
  if (c.pulse.kind == PulseKind::none) throw ValidationError("pulse.kind: leo-onorm needs a control pulse");
  const auto ctl = integrate_o_operator(c.params, PulseRealization::ideal(c.pulse), c.T, c.dt, c.stride);
  const auto bare = integrate_o_operator(c.params, PulseRealization::ideal(PulseSpec{}), c.T, c.dt, c.stride);
  std::vector<double> f1c, f2c, f1u, f2u;
  for (std::size_t k = 0; k < ctl.size(); ++k) {
    f1c.push_back(std::abs(ctl[k].F1));
    f2c.push_back(std::abs(ctl[k].F2));
    f1u.push_back(std::abs(bare[k].F1));
    f2u.push_back(std::abs(bare[k].F2));
    csv.row({static_cast<double>(k * c.stride) * c.dt, f1c[k], f2c[k], f1u[k], f2u[k]});
  }
  json s;
  s["peak_abs_F1_controlled"] = max_of(f1c);
  s["peak_abs_F2_controlled"] = max_of(f2c);
  s["peak_abs_F1_uncontrolled"] = max_of(f1u);
  s["peak_abs_F2_uncontrolled"] = max_of(f2u);
  s["suppression_ratio_F1"] = max_of(f1u) / max_of(f1c);
  s["suppression_ratio_F2"] = max_of(f2u) / max_of(f2c);
  s["mean_suppression_ratio_F1"] = mean_of(f1u) / mean_of(f1c);
  s["mean_suppression_ratio_F2"] = mean_of(f2u) / mean_of(f2c);
  return s;
}

inline json run_petz_forward(const ScenarioConfig& c, CsvWriter& csv) {
  const auto model = jc_lindblad_model(c.params);
  const auto rho0 = DensityState::pure(initial_state_vector(c));
  const auto fwd = forward_propagate(rho0, model, c.T, c.dt);
  const AnalyticG g(c.params.lambda, c.params.kappa);
  const ComplexMatrix a0 = partial_trace_cavity(rho0.matrix());
  const int e = static_cast<int>(Atom::excited), gr = static_cast<int>(Atom::ground);
  double pop_err = 0.0, coh_err = 0.0;
  for (std::size_t k = 0; k <= fwd.steps(); ++k) {
    const double t = fwd.time(k);
    const ComplexMatrix rho = fwd.states[k];
    const ComplexMatrix a = partial_trace_cavity(rho);
    const Complex gt = g(t);
    pop_err = std::max(pop_err, std::abs(a(e, e).real() - std::norm(gt) * a0(e, e).real()));
    coh_err = std::max(coh_err, std::abs(a(e, gr) - gt * std::exp(-kI * c.params.omega * t) * a0(e, gr)));
    if (k % c.stride == 0) {
      auto row = bloch_row(rho);
      row.insert(row.begin(), t);
      row.push_back(std::real((rho * rho).trace()));
      row.push_back(std::abs(gt));
      csv.row(row);
    }
  }
  json s;
  const ComplexMatrix last = fwd.states[fwd.steps()];
  s["final_purity"] = std::real((last * last).trace());
  s["final_fidelity_to_initial"] = fidelity(fwd.state(fwd.steps()), rho0);
  const ComplexMatrix P = protected_projector(c.params.n_max);
  if ((P * rho0.matrix() * P - rho0.matrix()).cwiseAbs().maxCoeff() < 1e-12 &&
      c.params.omega == c.params.omega_c) {
    s["max_abs_err_population_vs_g"] = pop_err;
    s["max_abs_err_coherence_vs_g"] = coh_err;
  }
  return s;
}

inline json run_petz_reverse(const ScenarioConfig& c, CsvWriter& csv) {
  const auto model = jc_lindblad_model(c.params);
  const auto rho0 = DensityState::pure(initial_state_vector(c));
  const auto fwd = forward_propagate(rho0, model, c.T, c.dt);
  ReverseOptions ro;
  ro.epsilon = c.epsilon;
  const auto back = reverse_propagate(fwd, model, ro);
  FisherOptions fo;
  fo.with_reversal = true;
  fo.reverse = ro;
  const auto F = fisher_trajectory(model, c.params.n_max, c.theta, c.T, c.dt, fo);
  const std::size_t n = fwd.steps();
  const auto D = optimal_pair_trace_distance(c.params.lambda, c.params.kappa, c.dt, n);
  const auto iv = noncontractive_intervals(D, c.dt);

  double max_err = 0.0, mirror = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    max_err = std::max(max_err, trace_distance(back.states[j], fwd.state(n - j)));
    mirror = std::max(mirror, std::abs(F.reversal[j] - F.forward[n - j]));
  }
  for (std::size_t k = 0; k <= n; k += c.stride) {
    const double t = fwd.time(k);
    std::vector<double> row{t};
    for (double x : bloch_row(fwd.states[k])) row.push_back(x);
    for (double x : bloch_row(back.states[n - k].matrix())) row.push_back(x);
    row.push_back(F.forward[k]);
    row.push_back(D[k]);
    row.push_back(detail::inside(iv, t) ? 1.0 : 0.0);
    csv.row(row);
  }
  json s;
  s["max_reversal_trace_distance"] = max_err;
  s["final_recovery_fidelity"] = fidelity(back.states.back(), rho0);
  s["max_fisher_mirror_error"] = mirror;
  s["nonmarkov_measure"] = nonmarkov_measure(D, c.dt);
  s["noncontractive_intervals"] = intervals_json(iv);
  s["support_leak_steps"] = back.support_leak_steps;
  s["epsilon"] = c.epsilon;
  s["theta"] = c.theta;
  return s;
}

inline json run_petz_rotated(const ScenarioConfig& c, CsvWriter& csv) {
  const auto model = jc_lindblad_model(c.params);
  const auto rho0 = DensityState::pure(initial_state_vector(c));
  const auto fwd = forward_propagate(rho0, model, c.T, c.dt);
  ReverseOptions ro;
  ro.epsilon = c.epsilon;
  const auto beta = rotated_reversal(fwd, model, ro);
  const std::size_t n = fwd.steps();
  double path_err = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double tp = static_cast<double>(j) * c.dt;
    const ComplexMatrix U = unitary_propagator(model.H, tp);
    const auto target = DensityState::trusted(U * fwd.states[n - j] * U.adjoint());
    const double e = trace_distance(beta.states[j], target);
    path_err = std::max(path_err, e);
    if (j % c.stride == 0) {
      auto row = bloch_row(beta.states[j].matrix());
      row.insert(row.begin(), tp);
      row.push_back(e);
      csv.row(row);
    }
  }
  const ComplexMatrix U = unitary_propagator(model.H, c.T);
  const auto want = DensityState::trusted(U * rho0.matrix() * U.adjoint());
  json s;
  s["final_trace_distance_to_target"] = trace_distance(beta.states.back(), want);
  s["final_fidelity_to_target"] = fidelity(beta.states.back(), want);
  s["max_trace_distance_to_rotated_path"] = path_err;
  s["epsilon"] = c.epsilon;
  return s;
}

inline json run_fisher(const ScenarioConfig& c, CsvWriter& csv) {
  const auto model = jc_lindblad_model(c.params);
  const auto F = fisher_trajectory(model, c.params.n_max, c.theta, c.T, c.dt);
  const std::size_t n = steps_of(c);
  const auto D = optimal_pair_trace_distance(c.params.lambda, c.params.kappa, c.dt, n);
  const auto ivD = noncontractive_intervals(D, c.dt);
  const auto ivF = increasing_intervals(F.forward, c.dt);
  double err = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * c.dt;
    const double four_g2 = 4.0 * D[k] * D[k];
    err = std::max(err, std::abs(F.forward[k] - four_g2));
    if (k % c.stride == 0) {
      csv.row({t, F.forward[k], four_g2, D[k], detail::inside(ivD, t) ? 1.0 : 0.0,
               detail::inside(ivF, t) ? 1.0 : 0.0});
    }
  }
  json s;
  s["max_abs_err_vs_4g2"] = err;
  s["nonmarkov_measure"] = nonmarkov_measure(D, c.dt);
  s["noncontractive_intervals"] = intervals_json(ivD);
  s["fisher_increasing_intervals"] = intervals_json(ivF);
  s["intervals_match"] = intervals_match(ivD, ivF, c.dt);
  s["theta"] = c.theta;
  return s;
}

inline json run_validate(const ScenarioConfig& c, const std::filesystem::path& csv_path,
                         bool& all_pass) {
  const auto checks = run_validation(c.quick);
  std::ofstream out(csv_path, std::ios::binary);
  out << "check,value,tolerance,pass\n";
  json list = json::array();
  all_pass = true;
  char buf[64];
  for (const auto& r : checks) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g", r.value, r.tolerance);
    out << r.name << ',' << buf << ',' << (r.pass ? 1 : 0) << '\n';
    list.push_back({{"check", r.name}, {"value", r.value}, {"tolerance", r.tolerance}, {"pass", r.pass}});
    all_pass = all_pass && r.pass;
  }
  json s;
  s["checks"] = list;
  s["all_passed"] = all_pass;
  s["quick"] = c.quick;
  return s;
}

inline std::vector<std::string> csv_columns(Scenario s) {
  switch (s) {
    case Scenario::leo_fidelity:
      return {"time", "fidelity_ideal_square", "fidelity_ideal_sine2", "fidelity_noisy_mean",
              "fidelity_noisy_min", "fidelity_noisy_max", "fidelity_uncontrolled"};
    case Scenario::leo_onorm:
      return {"time", "abs_F1_controlled", "abs_F2_controlled", "abs_F1_uncontrolled",
              "abs_F2_uncontrolled"};
    case Scenario::petz_forward:
      return {"time", "sx", "sy", "sz", "purity", "D_optimal"};
    case Scenario::petz_reverse:
      return {"time", "sx_fwd", "sy_fwd", "sz_fwd", "sx_bwd", "sy_bwd", "sz_bwd",
              "fisher", "D_optimal", "noncontractive_flag"};
    case Scenario::petz_rotated:
      return {"time", "bx", "by", "bz", "trace_distance_to_rotated_path"};
    case Scenario::fisher:
      return {"time", "fisher", "four_g2", "D_optimal", "noncontractive_flag",
              "fisher_increasing_flag"};
    case Scenario::validate:
      return {"check", "value", "tolerance", "pass"};
  }
  return {};
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace detail

/// Runs the scenario and writes its outputs. Configuration problems found
/// while running give exit code 1, numerical failures exit code 2; in both
/// cases the summary records the reason.
inline RunResult run_scenario(const ScenarioConfig& c) {
  namespace fs = std::filesystem;
  RunResult res;
  const std::string name = to_string(c.scenario);
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  res.csv_path = dir / (name + ".csv");
  res.summary_path = dir / (name + ".summary.json");

  json s;
  try {
    if (c.scenario == Scenario::validate) {
      bool all_pass = false;
      s = detail::run_validate(c, res.csv_path, all_pass);
      s["status"] = all_pass ? "ok" : "validation_failed";
      res.exit_code = all_pass ? kSuccess : kLoadError;
    } else {
      CsvWriter csv(res.csv_path, detail::csv_columns(c.scenario));
      switch (c.scenario) {
        case Scenario::leo_fidelity: s = detail::run_leo_fidelity(c, csv); break;
        case Scenario::leo_onorm: s = detail::run_leo_onorm(c, csv); break;
        case Scenario::petz_forward: s = detail::run_petz_forward(c, csv); break;
        case Scenario::petz_reverse: s = detail::run_petz_reverse(c, csv); break;
        case Scenario::petz_rotated: s = detail::run_petz_rotated(c, csv); break;
        case Scenario::fisher: s = detail::run_fisher(c, csv); break;
        case Scenario::validate: break;
      }
      s["status"] = "ok";
    }
  } catch (const NumericalError& e) {
    s = json{{"status", "numerical_failure"}, {"failing_time", e.time()}, {"message", e.what()}};
    res.exit_code = kNumericalFailure;
  } catch (const ValidationError& e) {
    s = json{{"status", "invalid_input"}, {"message", e.what()}};
    res.exit_code = kLoadError;
  }
  s["scenario"] = name;
  s["config"] = to_json(c);
  detail::write_json(res.summary_path, s);
  res.summary = std::move(s);
  return res;
}

}  // namespace jcctl::cli
