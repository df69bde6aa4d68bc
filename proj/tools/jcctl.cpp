// Command-line front end: run a configured scenario, run the cross-check
// suite, or print a scenario's default configuration.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "jcctl/cli/config.hpp"
#include "jcctl/cli/scenario.hpp"

namespace {

using namespace jcctl;
using namespace jcctl::cli;

int report(const RunResult& r) {
  const std::string status = r.summary.value("status", "");
  if (r.exit_code == kSuccess) {
    std::cout << "wrote " << r.csv_path.string() << " and " << r.summary_path.string() << '\n';
  } else {
    std::cerr << "error: " << status;
    if (r.summary.contains("message")) std::cerr << ": " << r.summary["message"].get<std::string>();
    std::cerr << '\n';
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jaynes-Cummings decoherence control simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run the scenario described by a JSON configuration");
  run->add_option("--config", config_path, "configuration file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");

  bool quick = false;
  std::string validate_out = ".";
  auto* validate = app.add_subcommand("validate", "run the numerical cross-checks");
  validate->add_flag("--quick", quick, "shorter time horizons");
  validate->add_option("--out", validate_out, "output directory");

  std::string scenario_name;
  auto* defaults = app.add_subcommand("print-defaults", "print a scenario's default configuration");
  defaults->add_option("scenario", scenario_name, "scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kLoadError;
  }

  try {
    if (*run) {
      ScenarioConfig cfg = load_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      return report(run_scenario(cfg));
    }
    if (*validate) {
      ScenarioConfig cfg = default_config(Scenario::validate);
      cfg.quick = quick;
      cfg.output_dir = validate_out;
      const auto r = run_scenario(cfg);
      for (const auto& c : r.summary.value("checks", json::array())) {
        std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["check"].get<std::string>()
                  << "  value=" << c["value"].get<double>()
                  << "  tol=" << c["tolerance"].get<double>() << '\n';
      }
      return report(r);
    }
    if (*defaults) {
      std::cout << to_json(default_config(parse_scenario(scenario_name))).dump(2) << '\n';
      return kSuccess;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kLoadError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kLoadError;
  }
  return kSuccess;
}
