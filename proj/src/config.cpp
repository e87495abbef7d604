#include "ccb/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ccb {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void reject_unknown_keys(const json& j, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      fail(path.empty() ? item.key() : path + "." + item.key(),
           "unknown key (rejected; the config is fail-closed)");
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path + key, "wrong type");
  }
}

int positive_int(const json& j, const std::string& key, int fallback) {
  const int v = get_or<int>(j, key, "", fallback);
  if (v <= 0) fail(key, "must be a positive integer, got " + std::to_string(v));
  return v;
}

double check_alpha(double a, const std::string& path) {
  if (!(a > 0.0) || !(a < 1.0)) {
    std::ostringstream msg;
    msg << "must be in (0,1), got " << a;
    fail(path, msg.str());
  }
  return a;
}

RewardFunction parse_reward(const json& j) {
  RewardFunction f;
  if (j.is_string()) {
    const std::string id = j.get<std::string>();
    if (id == "linear_sum") {
      f.id = RewardId::LinearSum;
    } else if (id == "saturating_concave") {
      f.id = RewardId::SaturatingConcave;
      f.scale = 1.0;
    } else {
      fail("reward_function", "unknown id '" + id +
                                  "' (expected linear_sum or saturating_concave)");
    }
    return f;
  }
  if (!j.is_object()) fail("reward_function", "expected string or object");
  reject_unknown_keys(j, "reward_function", {"id", "scale"});
  const std::string id = get_or<std::string>(j, "id", "reward_function.", "linear_sum");
  if (id == "linear_sum") {
    f.id = RewardId::LinearSum;
  } else if (id == "saturating_concave") {
    f.id = RewardId::SaturatingConcave;
  } else {
    fail("reward_function.id", "unknown id '" + id + "'");
  }
  f.scale = get_or<double>(j, "scale", "reward_function.", 1.0);
  if (f.id == RewardId::SaturatingConcave && !(f.scale > 0.0)) {
    fail("reward_function.scale", "must be > 0 for saturating_concave");
  }
  return f;
}

NoiseSpec parse_noise(const json& j) {
  if (!j.is_object()) fail("noise", "expected object {kind, param}");
  reject_unknown_keys(j, "noise", {"kind", "param"});
  NoiseSpec n;
  const std::string kind = get_or<std::string>(j, "kind", "noise.", "gaussian");
  if (kind == "gaussian") {
    n.kind = NoiseKind::Gaussian;
  } else if (kind == "uniform") {
    n.kind = NoiseKind::UniformBounded;
  } else {
    fail("noise.kind", "unknown kind '" + kind + "' (expected gaussian or uniform)");
  }
  n.param = get_or<double>(j, "param", "noise.", 1.0);
  if (n.param < 0.0) fail("noise.param", "must be >= 0");
  if (n.param > 1.0) {
    fail("noise.param", "must be <= 1 (1-sub-Gaussian noise assumption)");
  }
  return n;
}

const std::set<std::string> kKnownPolicies = {
    "ccconucb_known", "ccconucb_unknown", "c2ucb", "always_conservative"};

std::vector<std::string> default_policies(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::RegretCurves:
      return {"c2ucb", "ccconucb_known", "ccconucb_unknown"};
    case ExperimentKind::Table1:
      return {"c2ucb", "ccconucb_known"};
    case ExperimentKind::Endurance:
      return {"ccconucb_known", "always_conservative"};
    case ExperimentKind::Probes:
      return {"ccconucb_known", "ccconucb_unknown"};
  }
  return {};
}

std::vector<double> default_alpha_grid(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Table1:
      return {0.01, 0.15, 0.3, 0.6, 0.9};
    case ExperimentKind::Endurance:
      return {0.1, 0.3, 0.6};
    default:
      return {0.2};
  }
}

}  // namespace

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::RegretCurves:
      return "regret_curves";
    case ExperimentKind::Table1:
      return "table1";
    case ExperimentKind::Endurance:
      return "endurance";
    case ExperimentKind::Probes:
      return "probes";
  }
  return "unknown";
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root: expected a JSON object");
  reject_unknown_keys(
      j, "",
      {"experiment", "M", "d", "K", "T", "alpha", "alpha_grid", "delta",
       "lambda", "S", "L", "policies", "n_seeds", "reward_function", "noise",
       "recompute_mode", "conservative_set_size", "bracket_lo_rank",
       "bracket_hi_rank", "refresh_every", "workers",
       "realized_violation_counter", "output_dir"});

  ExperimentConfig cfg;
  if (!j.contains("experiment")) fail("experiment", "required key missing");
  const std::string exp = j.at("experiment").get<std::string>();
  if (exp == "regret_curves") {
    cfg.experiment = ExperimentKind::RegretCurves;
  } else if (exp == "table1") {
    cfg.experiment = ExperimentKind::Table1;
  } else if (exp == "endurance") {
    cfg.experiment = ExperimentKind::Endurance;
  } else if (exp == "probes") {
    cfg.experiment = ExperimentKind::Probes;
  } else {
    fail("experiment", "unknown experiment '" + exp + "'");
  }

  cfg.M = positive_int(j, "M", cfg.M);
  cfg.d = positive_int(j, "d", cfg.d);
  cfg.K = positive_int(j, "K", cfg.K);
  cfg.T = positive_int(j, "T", cfg.T);
  if (cfg.K > cfg.M) fail("K", "must be <= M");

  if (j.contains("alpha") && j.contains("alpha_grid")) {
    fail("alpha", "give either alpha or alpha_grid, not both");
  }
  if (j.contains("alpha")) {
    cfg.alpha_grid = {check_alpha(j.at("alpha").get<double>(), "alpha")};
  } else if (j.contains("alpha_grid")) {
    cfg.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    if (cfg.alpha_grid.empty()) fail("alpha_grid", "must be non-empty");
    for (std::size_t i = 0; i < cfg.alpha_grid.size(); ++i) {
      check_alpha(cfg.alpha_grid[i], "alpha_grid[" + std::to_string(i) + "]");
      if (i > 0 && cfg.alpha_grid[i] <= cfg.alpha_grid[i - 1]) {
        fail("alpha_grid", "entries must be strictly increasing");
      }
    }
  } else {
    cfg.alpha_grid = default_alpha_grid(cfg.experiment);
  }

  cfg.delta = get_or<double>(j, "delta", "", cfg.delta);
  if (!(cfg.delta > 0.0) || !(cfg.delta < 1.0)) {
    fail("delta", "must be in (0,1)");
  }
  cfg.lambda = get_or<double>(j, "lambda", "", cfg.lambda);
  if (!(cfg.lambda > 0.0)) fail("lambda", "must be > 0");
  cfg.S = get_or<double>(j, "S", "", 0.0);
  if (j.contains("S") && !(cfg.S > 0.0)) fail("S", "must be > 0");
  cfg.L = get_or<double>(j, "L", "", 0.0);
  if (j.contains("L") && !(cfg.L > 0.0)) fail("L", "must be > 0");
  if (cfg.S == 0.0) cfg.S = 2.0 * std::sqrt(static_cast<double>(cfg.d));
  if (cfg.L == 0.0) cfg.L = static_cast<double>(cfg.d);

  cfg.policies = get_or<std::vector<std::string>>(j, "policies", "",
                                                  default_policies(cfg.experiment));
  if (cfg.policies.empty()) fail("policies", "must be non-empty");
  for (const auto& p : cfg.policies) {
    if (!kKnownPolicies.count(p)) {
      fail("policies", "unknown policy '" + p + "'");
    }
  }

  cfg.n_seeds = positive_int(j, "n_seeds", cfg.n_seeds);
  if (j.contains("reward_function")) cfg.reward = parse_reward(j.at("reward_function"));
  if (j.contains("noise")) cfg.noise = parse_noise(j.at("noise"));

  const std::string mode =
      get_or<std::string>(j, "recompute_mode", "", "fresh");
  if (mode == "fresh") {
    cfg.recompute_mode = RecomputeMode::Fresh;
  } else if (mode == "static") {
    cfg.recompute_mode = RecomputeMode::Static;
  } else {
    fail("recompute_mode", "expected 'fresh' or 'static'");
  }

  cfg.conservative_set_size =
      get_or<int>(j, "conservative_set_size", "", 0);
  if (j.contains("conservative_set_size") &&
      (cfg.conservative_set_size < 1 || cfg.conservative_set_size > cfg.K)) {
    fail("conservative_set_size", "must be in [1, K]");
  }
  if (cfg.conservative_set_size == 0) cfg.conservative_set_size = cfg.K;
  cfg.bracket_lo_rank = get_or<int>(j, "bracket_lo_rank", "", cfg.bracket_lo_rank);
  cfg.bracket_hi_rank = get_or<int>(j, "bracket_hi_rank", "", cfg.bracket_hi_rank);
  if (cfg.bracket_hi_rank < 1 || cfg.bracket_hi_rank >= cfg.bracket_lo_rank ||
      cfg.bracket_lo_rank > cfg.M) {
    fail("bracket_lo_rank", "bracket ranks must satisfy 1 <= hi < lo <= M");
  }
  cfg.refresh_every = get_or<long>(j, "refresh_every", "", cfg.refresh_every);
  cfg.workers = get_or<int>(j, "workers", "", cfg.workers);
  if (cfg.workers < 0) fail("workers", "must be >= 0");
  cfg.realized_violation_counter =
      get_or<bool>(j, "realized_violation_counter", "", false);
  cfg.output_dir = get_or<std::string>(j, "output_dir", "", cfg.output_dir);
  if (cfg.output_dir.empty()) fail("output_dir", "must be non-empty");
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["M"] = cfg.M;
  j["d"] = cfg.d;
  j["K"] = cfg.K;
  j["T"] = cfg.T;
  j["alpha_grid"] = cfg.alpha_grid;
  j["delta"] = cfg.delta;
  j["lambda"] = cfg.lambda;
  j["S"] = cfg.S;
  j["L"] = cfg.L;
  j["policies"] = cfg.policies;
  j["n_seeds"] = cfg.n_seeds;
  j["reward_function"] = {
      {"id", cfg.reward.id == RewardId::LinearSum ? "linear_sum"
                                                  : "saturating_concave"},
      {"scale", cfg.reward.scale}};
  j["noise"] = {{"kind", cfg.noise.kind == NoiseKind::Gaussian ? "gaussian"
                                                               : "uniform"},
                {"param", cfg.noise.param}};
  j["recompute_mode"] =
      cfg.recompute_mode == RecomputeMode::Fresh ? "fresh" : "static";
  j["conservative_set_size"] = cfg.conservative_set_size;
  j["bracket_lo_rank"] = cfg.bracket_lo_rank;
  j["bracket_hi_rank"] = cfg.bracket_hi_rank;
  j["refresh_every"] = cfg.refresh_every;
  j["workers"] = cfg.workers;
  j["realized_violation_counter"] = cfg.realized_violation_counter;
  j["output_dir"] = cfg.output_dir;
  return j;
}

GenConfig gen_config_of(const ExperimentConfig& cfg) {
  GenConfig g;
  g.M = cfg.M;
  g.d = cfg.d;
  g.K = cfg.K;
  g.S = cfg.S;
  g.L = cfg.L;
  g.conservative_set_size = cfg.conservative_set_size;
  g.bracket_lo_rank = cfg.bracket_lo_rank;
  g.bracket_hi_rank = cfg.bracket_hi_rank;
  g.noise = cfg.noise;
  g.feature_law = FeatureLaw::UniformSymmetric;
  g.reward = cfg.reward;
  return resolve_gen_config(g);
}

}  // namespace ccb
