#include <CLI11.hpp>
#include <iostream>

#include "dclink/commands.hpp"

namespace fs = std::filesystem;
using namespace dclink::cli;

namespace {

void add_overrides(CLI::App* cmd, Overrides& o, std::vector<std::string>& sets) {
  cmd->add_option("--seed", o.seed, "Random seed for parameter perturbation");
  cmd->add_option("--ts", o.Ts, "Controller sample period [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--duration", o.duration, "Simulated horizon [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--set", sets, "Override a scenario entry, section.key=value");
}

bool resolve_sets(const std::vector<std::string>& sets, Overrides& o) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "config error: --set expects section.key=value, got '" << s << "'\n";
      return false;
    }
    o.keys.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel DC-DC converter control design and simulation"};
  app.set_version_flag("--version", DCLINK_VERSION);
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::string> sets;
  std::string scenario_path;
  std::string out_dir;

  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and write timeseries.csv, summary.txt, meta.txt");
  run_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (default $DCLINK_OUT/<scenario>)");
  add_overrides(run_cmd, o, sets);

  std::string level = "quick";
  VerifyOptions vopt;
  auto* verify_cmd = app.add_subcommand("verify", "Run the numerical property suite");
  verify_cmd->add_option("level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  verify_cmd->add_flag("--inject-fault", vopt.inject_fault, "Perturb Kv_1 by 1% to exercise failure reporting");
  verify_cmd->add_option("--seed", vopt.seed, "Seed for randomized checks");

  std::string param;
  std::vector<std::string> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario once per parameter value");
  sweep_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  sweep_cmd->add_option("--param", param, "Dotted scenario key, e.g. network.busC")->required();
  sweep_cmd->add_option("--values", values, "Values to substitute")->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "Output directory (default $DCLINK_OUT/<scenario>)");
  add_overrides(sweep_cmd, o, sets);

  auto* freq_cmd = app.add_subcommand("freq", "Write Bode data of controllers and sensitivities");
  freq_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  freq_cmd->add_option("--out", out_dir, "Output directory (default $DCLINK_OUT/<scenario>)");
  add_overrides(freq_cmd, o, sets);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  if (!resolve_sets(sets, o)) return kConfigError;

  const fs::path out = out_dir.empty() ? default_out_dir(scenario_path) : fs::path(out_dir);
  try {
    if (*run_cmd) return run(scenario_path, out, o, std::cout, std::cerr);
    if (*verify_cmd) {
      vopt.full = level == "full";
      return verify(vopt, std::cout);
    }
    if (*sweep_cmd) return sweep(scenario_path, param, values, out, o, std::cout, std::cerr);
    if (*freq_cmd) return freq(scenario_path, out, o, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kConfigError;
}
