#pragma once

// Scenario configuration: JSON documents with per-scenario defaults.

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "jcctl/jc_model.hpp"
#include "jcctl/pulse.hpp"

namespace jcctl::cli {

using json = nlohmann::json;

enum class Scenario { leo_fidelity, leo_onorm, petz_forward, petz_reverse, petz_rotated, fisher,
                      validate };

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
  static const std::vector<std::pair<Scenario, std::string>> names = {
      {Scenario::leo_fidelity, "leo-fidelity"}, {Scenario::leo_onorm, "leo-onorm"},
      {Scenario::petz_forward, "petz-forward"}, {Scenario::petz_reverse, "petz-reverse"},
      {Scenario::petz_rotated, "petz-rotated"}, {Scenario::fisher, "fisher"},
      {Scenario::validate, "validate"}};
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [k, name] : scenario_names())
    if (k == s) return name;
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  for (const auto& [k, name] : scenario_names())
    if (name == s) return k;
  std::string all;
  for (const auto& [k, name] : scenario_names()) all += (all.empty() ? "" : ", ") + name;
  throw ValidationError("scenario: unknown scenario '" + s + "' (expected one of " + all + ")");
}

inline bool is_leo(Scenario s) { return s == Scenario::leo_fidelity || s == Scenario::leo_onorm; }

struct ScenarioConfig {
  Scenario scenario = Scenario::leo_fidelity;
  JCParams params{};
  PulseSpec pulse{};
  std::string initial_state = "plus";      // preset name, or "custom"
  std::vector<Complex> amplitudes;         // custom initial state
  double T = 10.0;
  double dt = 1e-4;
  std::size_t stride = 10;
  std::size_t n_runs = 50;
  std::uint64_t seed = 1;
  double theta = std::numbers::pi / 4.0;
  double epsilon = 1e-10;
  bool quick = false;  // validate only
  std::string output_dir = ".";
};

/// Default parameter sets: the leakage-control set for leo-*, the reversal set
/// for everything else.
inline ScenarioConfig default_config(Scenario s) {
  ScenarioConfig c;
  c.scenario = s;
  if (is_leo(s)) {
    c.pulse = PulseSpec::square(100.0, 0.1);
    c.pulse.jitter_fraction = 0.05;
    c.dt = 1e-4;
  } else {
    c.params.kappa = 0.6;
    c.params.lambda = 0.75;
    c.dt = 1e-3;
  }
  return c;
}

inline json to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["params"] = {{"omega", c.params.omega},   {"omega_c", c.params.omega_c},
                 {"kappa", c.params.kappa},   {"lambda", c.params.lambda},
                 {"gamma", c.params.gamma},   {"omega0", c.params.omega0},
                 {"n_max", c.params.n_max}};
  if (is_leo(c.scenario)) {
    j["pulse"] = {{"kind", std::string(to_string(c.pulse.kind))},
                  {"amplitude", c.pulse.amplitude},
                  {"tau_c", c.pulse.tau_c},
                  {"omega_p", c.pulse.omega_p},
                  {"jitter_fraction", c.pulse.jitter_fraction}};
    j["n_runs"] = c.n_runs;
    j["seed"] = c.seed;
  }
  if (c.initial_state == "custom") {
    json amps = json::array();
    for (const auto& a : c.amplitudes) amps.push_back({a.real(), a.imag()});
    j["initial_state"] = amps;
  } else {
    j["initial_state"] = c.initial_state;
  }
  j[is_leo(c.scenario) ? "T" : "tau"] = c.T;
  j["dt"] = c.dt;
  j["stride"] = c.stride;
  if (c.scenario == Scenario::fisher || c.scenario == Scenario::petz_reverse) j["theta"] = c.theta;
  if (!is_leo(c.scenario)) j["epsilon"] = c.epsilon;
  if (c.scenario == Scenario::validate) j["quick"] = c.quick;
  j["output_dir"] = c.output_dir;
  return j;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

inline double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) fail(path, "must be > 0");
  return x;
}

inline std::uint64_t count(const json& v, const std::string& path, std::uint64_t min) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected an integer");
  if (v.is_number_integer() && v.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
    fail(path, "must be >= " + std::to_string(min));
  }
  return v.get<std::uint64_t>();
}

inline void check_keys(const json& obj, const std::string& path,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
  }
}

inline const std::set<std::string>& initial_presets() {
  static const std::set<std::string> names = {"plus", "minus", "g0", "e0", "theta"};
  return names;
}

}  // namespace detail

/// Parse and validate a configuration document. Missing fields take the
/// scenario's defaults.
inline ScenarioConfig parse_config(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) fail("<root>", "expected a JSON object");
  if (!doc.contains("scenario")) fail("scenario", "required field missing");
  if (!doc["scenario"].is_string()) fail("scenario", "expected a string");
  const Scenario s = parse_scenario(doc["scenario"].get<std::string>());
  ScenarioConfig c = default_config(s);

  std::set<std::string> top = {"scenario", "params", "initial_state", "dt", "stride",
                               "output_dir"};
  if (is_leo(s)) {
    top.insert({"pulse", "T", "n_runs", "seed"});
  } else {
    top.insert({"tau", "epsilon"});
  }
  if (s == Scenario::fisher || s == Scenario::petz_reverse) top.insert("theta");
  if (s == Scenario::validate) top.insert("quick");
  check_keys(doc, "", top);

  if (doc.contains("params")) {
    const json& p = doc["params"];
    check_keys(p, "params", {"omega", "omega_c", "kappa", "lambda", "gamma", "omega0", "n_max"});
    if (p.contains("omega")) c.params.omega = number(p["omega"], "params.omega");
    if (p.contains("omega_c")) c.params.omega_c = number(p["omega_c"], "params.omega_c");
    if (p.contains("kappa")) c.params.kappa = number(p["kappa"], "params.kappa");
    if (p.contains("lambda")) c.params.lambda = number(p["lambda"], "params.lambda");
    if (p.contains("gamma")) c.params.gamma = positive(p["gamma"], "params.gamma");
    if (p.contains("omega0")) c.params.omega0 = number(p["omega0"], "params.omega0");
    if (p.contains("n_max")) {
      c.params.n_max = static_cast<int>(count(p["n_max"], "params.n_max", 1));
      if (c.params.n_max > 64) fail("params.n_max", "must be <= 64");
    }
  }
  try {
    c.params.validate();
  } catch (const ValidationError& e) {
    fail("params", e.what());
  }

  if (doc.contains("pulse")) {
    const json& p = doc["pulse"];
    check_keys(p, "pulse", {"kind", "amplitude", "tau_c", "omega_p", "jitter_fraction"});
    if (p.contains("kind")) {
      if (!p["kind"].is_string()) fail("pulse.kind", "expected a string");
      try {
        c.pulse.kind = parse_pulse_kind(p["kind"].get<std::string>());
      } catch (const ValidationError& e) {
        fail("pulse.kind", e.what());
      }
    }
    if (p.contains("amplitude")) c.pulse.amplitude = number(p["amplitude"], "pulse.amplitude");
    if (p.contains("tau_c")) c.pulse.tau_c = positive(p["tau_c"], "pulse.tau_c");
    if (p.contains("omega_p")) c.pulse.omega_p = positive(p["omega_p"], "pulse.omega_p");
    if (p.contains("jitter_fraction")) {
      c.pulse.jitter_fraction = number(p["jitter_fraction"], "pulse.jitter_fraction");
      if (c.pulse.jitter_fraction < 0.0 || c.pulse.jitter_fraction >= 1.0) {
        fail("pulse.jitter_fraction", "must lie in [0, 1)");
      }
    }
  }

  if (doc.contains("initial_state")) {
    const json& v = doc["initial_state"];
    if (v.is_string()) {
      c.initial_state = v.get<std::string>();
      if (!initial_presets().count(c.initial_state)) {
        fail("initial_state", "unknown preset '" + c.initial_state +
                                  "' (expected plus, minus, g0, e0 or theta)");
      }
    } else if (v.is_array()) {
      c.initial_state = "custom";
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string path = "initial_state[" + std::to_string(i) + "]";
        if (v[i].is_number()) {
          c.amplitudes.emplace_back(number(v[i], path), 0.0);
        } else if (v[i].is_array() && v[i].size() == 2) {
          c.amplitudes.emplace_back(number(v[i][0], path + "[0]"), number(v[i][1], path + "[1]"));
        } else {
          fail(path, "expected a number or a [re, im] pair");
        }
      }
      if (static_cast<Eigen::Index>(c.amplitudes.size()) != c.params.dim()) {
        fail("initial_state", "expected " + std::to_string(c.params.dim()) + " amplitudes");
      }
      double norm = 0.0;
      for (const auto& a : c.amplitudes) norm += std::norm(a);
      if (!(norm > 0.0)) fail("initial_state", "zero vector");
    } else {
      fail("initial_state", "expected a preset name or an amplitude list");
    }
  }

  const char* time_key = is_leo(s) ? "T" : "tau";
  if (doc.contains(time_key)) c.T = positive(doc[time_key], time_key);
  if (doc.contains("dt")) c.dt = positive(doc["dt"], "dt");
  if (doc.contains("stride")) c.stride = count(doc["stride"], "stride", 1);
  if (doc.contains("n_runs")) c.n_runs = count(doc["n_runs"], "n_runs", 1);
  if (doc.contains("seed")) c.seed = count(doc["seed"], "seed", 0);
  if (doc.contains("theta")) c.theta = number(doc["theta"], "theta");
  if (doc.contains("epsilon")) c.epsilon = positive(doc["epsilon"], "epsilon");
  if (doc.contains("quick")) {
    if (!doc["quick"].is_boolean()) fail("quick", "expected true or false");
    c.quick = doc["quick"].get<bool>();
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) fail("output_dir", "expected a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  }
  c.pulse.seed = c.seed;

  if (!divides(c.T, c.dt)) fail("dt", "must divide the total time " + std::to_string(c.T));
  if (is_leo(s)) {
    try {
      c.pulse.validate();
      check_pulse_alignment(c.pulse, c.dt);
    } catch (const ValidationError& e) {
      fail("dt", e.what());
    }
  }
  const auto steps = static_cast<std::size_t>(std::llround(c.T / c.dt));
  if (steps % c.stride != 0) fail("stride", "must divide the number of steps");
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open configuration file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ValidationError(path + ": configuration file is empty");
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return parse_config(doc);
}

/// Initial state vector for a config: presets act on the protected space.
inline ComplexVector initial_state_vector(const ScenarioConfig& c) {
  const int n = c.params.n_max;
  const ComplexVector g0 = basis_ket(Atom::ground, 0, n);
  const ComplexVector e0 = basis_ket(Atom::excited, 0, n);
  ComplexVector v;
  if (c.initial_state == "plus") {
    v = g0 + e0;
  } else if (c.initial_state == "minus") {
    v = e0 - g0;
  } else if (c.initial_state == "g0") {
    v = g0;
  } else if (c.initial_state == "e0") {
    v = e0;
  } else if (c.initial_state == "theta") {
    v = std::cos(c.theta) * g0 + std::sin(c.theta) * e0;
  } else {
    v = ComplexVector(c.params.dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = c.amplitudes[static_cast<std::size_t>(i)];
  }
  return v / v.norm();
}

}  // namespace jcctl::cli
