// Experiment runner CLI: binds every experiment to a reproducible
// config-driven invocation that emits JSON metrics, CSV data files and a
// manifest. Exit codes: 0 success, 1 numerical failure, 2 usage/validation.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "speccart/common.hpp"
#include "speccart/config.hpp"
#include "speccart/experiments.hpp"

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

speccart::ExperimentConfig build_config(const std::string& experiment,
                                        const std::string& config_path,
                                        std::optional<std::int64_t> seed,
                                        const std::string& out_dir, const std::string& format) {
  speccart::Config raw;
  if (!config_path.empty()) raw = speccart::Config::load(config_path);
  if (!experiment.empty()) raw.set("", "experiment", experiment);
  if (seed) raw.set("", "seed", std::to_string(*seed));
  if (!out_dir.empty()) raw.set("", "output_dir", out_dir);
  if (!format.empty()) raw.set("", "format", format);
  return speccart::make_experiment_config(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speccart: spectrum cartography and LEO localization experiments"};
  app.require_subcommand(1);

  std::string experiment, config_path, out_dir, format;
  std::optional<std::int64_t> seed;

  CLI::App* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  run->add_option("experiment", experiment,
                  "experiment name (fim-demo, reliability-demo, radiomap, localize-nw, "
                  "localize-attn, waterfill, adv-waterfill, beamhop)");
  run->add_option("--config", config_path, "config file (key = value with [experiment] sections)");
  run->add_option("--seed", seed, "seed override");
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--format", format, "metric payload format: json or csv");

  CLI::App* check = app.add_subcommand("validate", "validate a config without running");
  check->add_option("experiment", experiment, "experiment name");
  check->add_option("--config", config_path, "config file");
  check->add_option("--seed", seed, "seed override");
  check->add_option("--out", out_dir, "output directory override");
  check->add_option("--format", format, "metric payload format: json or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    speccart::ExperimentConfig cfg =
        build_config(experiment, config_path, seed, out_dir, format);

    if (check->parsed()) {
      std::vector<std::string> violations = speccart::validate(cfg);
      if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& v : violations) std::cout << v << "\n";
      return kExitUsage;
    }

    speccart::RunArtifacts artifacts = speccart::run_experiment(cfg);
    speccart::write_artifacts(artifacts, cfg.output_dir);
    std::cout << "wrote " << artifacts.files.size() + 1 << " files to " << cfg.output_dir << "\n";
    for (const auto& name : artifacts.manifest()) std::cout << "  " << name << "\n";
    std::cout << "  manifest.json\n";
    return 0;
  } catch (const speccart::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const speccart::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
