#pragma once

#include "ccb/env.hpp"
#include "ccb/policy.hpp"

#include <nlohmann/json_fwd.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace ccb {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { RegretCurves, Table1, Endurance, Probes };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Probes;
  int M = 20;
  int d = 5;
  int K = 2;
  int T = 2000;
  std::vector<double> alpha_grid;  // singleton when "alpha" was given
  double delta = 0.1;
  double lambda = 1.0;
  double S = 0.0;  // resolved (auto = 2 sqrt(d))
  double L = 0.0;  // resolved (auto = d)
  std::vector<std::string> policies;
  int n_seeds = 50;
  RewardFunction reward;
  NoiseSpec noise;
  RecomputeMode recompute_mode = RecomputeMode::Fresh;
  int conservative_set_size = 0;  // resolved (auto = K)
  int bracket_lo_rank = 9;
  int bracket_hi_rank = 8;
  long refresh_every = 1000;
  int workers = 0;
  bool realized_violation_counter = false;
  std::string output_dir = "out";
};

// Strict parse: unknown keys and out-of-domain values are rejected with a
// field-path diagnostic. Absent keys take documented defaults.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const ExperimentConfig& cfg);

GenConfig gen_config_of(const ExperimentConfig& cfg);

const char* experiment_name(ExperimentKind kind);

}  // namespace ccb
