#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "jetqd/errors.hpp"
#include "scenario.hpp"

#ifndef JETQD_SCENARIO_DIR
#define JETQD_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace jetqd::cli;

namespace {

// A path, or the name of a built-in scenario.
fs::path resolve(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  if (find_scenario(arg)) {
    for (const fs::path dir : {fs::path("scenarios"), fs::path(JETQD_SCENARIO_DIR)}) {
      const auto p = dir / (arg + ".toml");
      if (fs::exists(p)) return p;
    }
  }
  throw jetqd::ConfigError("no scenario file '" + arg + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jet-space quantum dynamics: trajectories, ensembles, measurements and spin"};
  app.require_subcommand(1);

  std::string file;
  Overrides o;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "run a scenario file (or built-in scenario name)");
  run->add_option("scenario", file, "scenario TOML")->required();
  run->add_option("--output-dir", out_dir, "output directory (default out/<name>)");
  run->add_option("--seed", o.seed, "random seed");
  run->add_option("--truncation", o.truncation, "truncation order N");
  run->add_option("--dt", o.dt, "time step");
  run->add_option("--t-final", o.t_final, "final time");
  run->add_option("--closure", o.closure, "closure policy")->check(CLI::IsMember({"zero", "oracle"}));
  run->add_option("--threads", o.threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  run->add_flag("--no-detectors", o.no_detectors, "double slit without which-path detectors");

  app.add_subcommand("list", "list built-in scenarios");
  std::string name;
  auto* describe = app.add_subcommand("describe", "describe a built-in scenario");
  describe->add_option("name", name, "scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("list")) {
      for (const auto& e : catalog()) {
        std::cout << std::left << std::setw(24) << e.name << std::setw(14) << e.kind << e.summary << '\n';
      }
      return 0;
    }
    if (app.got_subcommand("describe")) {
      const auto* e = find_scenario(name);
      if (!e) {
        std::cerr << "unknown scenario '" << name << "'; see `jetqd list`\n";
        return 2;
      }
      std::cout << e->name << " (" << e->kind << ")\n  " << e->summary << "\n  exercises: " << e->exercises << '\n';
      return 0;
    }
    const auto outcome = run_scenario(resolve(file), o, out_dir ? std::optional<fs::path>(*out_dir) : std::nullopt);
    std::cerr << "outputs in " << outcome.output_dir.string() << '\n';
    return outcome.exit_code;
  } catch (const jetqd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const jetqd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
