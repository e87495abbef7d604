#pragma once

#include "ccb/config.hpp"
#include "ccb/harness.hpp"

#include <cstdint>
#include <string>

namespace ccb {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
  std::uint64_t seed_offset = 0;
  int workers = 0;               // overrides config when > 0
  std::string output_override;   // overrides config output_dir when non-empty
};

// Exit codes: 0 success, 1 probe/acceptance failure, 3 runtime abort.
// (Config errors are raised as ConfigError before this is reached: exit 2.)
int cmd_run(const ExperimentConfig& cfg, const RunOptions& opt);

// One seeded episode under an experiment configuration; shared by the CLI
// experiments and the test suites.
EpisodeResult run_policy_episode(const ExperimentConfig& cfg,
                                 const EnvironmentInstance& inst,
                                 const std::string& policy, double alpha,
                                 const ProbeOptions& probes);

}  // namespace ccb
