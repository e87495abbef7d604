// Simulation front end: loads an experiment config, runs it, and writes
// NDJSON logs, CSV aggregates, a probe report, and a manifest.
#include "ccb/config.hpp"
#include "ccb/experiments.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"contextual combinatorial conservative bandit simulator"};

  std::string config_path;
  ccb::RunOptions opt;
  app.add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  app.add_option("--seed-offset", opt.seed_offset,
                 "added to every instance seed");
  app.add_option("--workers", opt.workers,
                 "worker threads (0 = hardware concurrency)");
  app.add_option("--output", opt.output_override,
                 "output directory (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    const ccb::ExperimentConfig cfg = ccb::parse_config(config_path);
    return ccb::cmd_run(cfg, opt);
  } catch (const ccb::ConfigError& e) {
    std::cerr << "[config error] " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "[abort] " << e.what() << "\n";
    return 3;
  }
}
