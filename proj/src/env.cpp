#include "ccb/env.hpp"

#include "ccb/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ccb {

namespace {

constexpr long kRetryBudget = 1000000;

double noise_draw(const NoiseSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case NoiseKind::Gaussian:
      return spec.param * rng.normal();
    case NoiseKind::UniformBounded:
      return rng.uniform(-spec.param, spec.param);
  }
  throw std::logic_error("noise_draw: unknown noise kind");
}

Vec raw_feature(FeatureLaw law, int d, Rng& rng) {
  Vec x(d);
  switch (law) {
    case FeatureLaw::UniformSymmetric:
      for (int i = 0; i < d; ++i) x[i] = rng.uniform(-1.0, 1.0);
      return x;
    case FeatureLaw::UniformPositive:
      for (int i = 0; i < d; ++i) x[i] = rng.uniform(0.0, 1.0);
      return x;
  }
  throw std::logic_error("raw_feature: unknown feature law");
}

// Rejection sampling: nonnegative expected weight and bounded norm.
Vec admissible_feature(const GenConfig& cfg, const Vec& theta, Rng& rng,
                       const char* what) {
  for (long tries = 0; tries < kRetryBudget; ++tries) {
    Vec x = raw_feature(cfg.feature_law, cfg.d, rng);
    if (x.squaredNorm() <= cfg.L && theta.dot(x) >= 0.0) return x;
  }
  std::ostringstream msg;
  msg << what << ": retry budget (" << kRetryBudget
      << " draws) exhausted while sampling an admissible feature";
  throw std::runtime_error(msg.str());
}

}  // namespace

GenConfig resolve_gen_config(GenConfig cfg) {
  if (cfg.M <= 0 || cfg.d <= 0 || cfg.K <= 0) {
    throw std::invalid_argument("gen config: M, d, K must be positive");
  }
  if (cfg.K > cfg.M) throw std::invalid_argument("gen config: K must be <= M");
  if (cfg.S == 0.0) cfg.S = 2.0 * std::sqrt(static_cast<double>(cfg.d));
  if (cfg.L == 0.0) cfg.L = static_cast<double>(cfg.d);
  if (!(cfg.S > 0.0) || !(cfg.L > 0.0)) {
    throw std::invalid_argument("gen config: S and L must be positive");
  }
  if (cfg.conservative_set_size == 0) cfg.conservative_set_size = cfg.K;
  if (cfg.conservative_set_size < 1 || cfg.conservative_set_size > cfg.K) {
    throw std::invalid_argument(
        "gen config: conservative_set_size must be in [1, K]");
  }
  if (cfg.bracket_hi_rank < 1 || cfg.bracket_hi_rank >= cfg.bracket_lo_rank ||
      cfg.bracket_lo_rank > cfg.M) {
    throw std::invalid_argument(
        "gen config: bracket ranks must satisfy 1 <= hi < lo <= M");
  }
  if (cfg.noise.param < 0.0) {
    throw std::invalid_argument("gen config: noise parameter must be >= 0");
  }
  if (cfg.noise.param > 1.0) {
    throw std::invalid_argument(
        "gen config: noise parameter must be <= 1 to stay 1-sub-Gaussian");
  }
  if (cfg.reward.id == RewardId::SaturatingConcave && !(cfg.reward.scale > 0.0)) {
    throw std::invalid_argument("gen config: saturating reward scale must be > 0");
  }
  return cfg;
}

EnvironmentInstance generate_instance(const GenConfig& raw, std::uint64_t seed) {
  EnvironmentInstance inst;
  inst.cfg = resolve_gen_config(raw);
  inst.seed = seed;
  const GenConfig& cfg = inst.cfg;

  Rng theta_rng = stream(seed, StreamPurpose::Theta);
  inst.theta_star = Vec(cfg.d);
  for (int i = 0; i < cfg.d; ++i) inst.theta_star[i] = theta_rng.normal();
  const double norm = inst.theta_star.norm();
  if (norm > cfg.S && norm > 0.0) inst.theta_star *= cfg.S / norm;

  // Reference draw anchoring the conservative-reward bracket.
  Rng ref_rng = stream(seed, StreamPurpose::ReferenceDraw);
  inst.reference_weights = Vec(cfg.M);
  for (int a = 0; a < cfg.M; ++a) {
    const Vec x = admissible_feature(cfg, inst.theta_star, ref_rng,
                                     "generate_instance(reference draw)");
    inst.reference_weights[a] = inst.theta_star.dot(x);
  }
  Vec sorted = inst.reference_weights;
  std::sort(sorted.data(), sorted.data() + sorted.size(),
            std::greater<double>());
  const double bracket_hi = sorted[cfg.bracket_hi_rank - 1];
  const double bracket_lo = sorted[cfg.bracket_lo_rank - 1];

  Rng cons_rng = stream(seed, StreamPurpose::ConservativeArms);
  inst.conservative_features = Mat(cfg.d, cfg.conservative_set_size);
  for (int a = 0; a < cfg.conservative_set_size; ++a) {
    bool placed = false;
    for (long tries = 0; tries < kRetryBudget; ++tries) {
      Vec x = raw_feature(cfg.feature_law, cfg.d, cons_rng);
      if (x.squaredNorm() > cfg.L) continue;
      const double w = inst.theta_star.dot(x);
      if (w >= bracket_lo && w <= bracket_hi) {
        inst.conservative_features.col(a) = x;
        placed = true;
        break;
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "generate_instance: retry budget (" << kRetryBudget
          << " draws) exhausted placing conservative arm " << a
          << " in the expected-weight bracket [" << bracket_lo << ", "
          << bracket_hi << "]; consider wider bracket ranks";
      throw std::runtime_error(msg.str());
    }
  }
  inst.mu0_true = evaluate(
      cfg.reward, inst.conservative_features.transpose() * inst.theta_star);
  return inst;
}

RoundContext sample_round_context(const EnvironmentInstance& inst, int t,
                                  std::uint64_t episode_seed) {
  if (t < 1) throw std::invalid_argument("sample_round_context: t must be >= 1");
  RoundContext ctx;
  ctx.t = t;
  ctx.conservative_features = inst.conservative_features;
  ctx.base_features = Mat(inst.cfg.d, inst.cfg.M);
  Rng rng = stream(episode_seed, StreamPurpose::Context,
                   static_cast<std::uint64_t>(t));
  for (int a = 0; a < inst.cfg.M; ++a) {
    ctx.base_features.col(a) = admissible_feature(
        inst.cfg, inst.theta_star, rng, "sample_round_context");
  }
  return ctx;
}

Vec expected_weights(const EnvironmentInstance& inst, const RoundContext& ctx,
                     const ActionSet& action) {
  if (action.is_conservative()) {
    return inst.conservative_features.transpose() * inst.theta_star;
  }
  Vec w(action.arms.size());
  for (std::size_t i = 0; i < action.arms.size(); ++i) {
    const int arm = action.arms[i];
    if (arm < 0 || arm >= inst.cfg.M) {
      throw std::invalid_argument("expected_weights: arm id out of range");
    }
    w[i] = inst.theta_star.dot(ctx.base_features.col(arm));
  }
  return w;
}

Vec realize_weights(const EnvironmentInstance& inst, const RoundContext& ctx,
                    const ActionSet& action, std::uint64_t episode_seed) {
  Vec w = expected_weights(inst, ctx, action);
  Rng rng = stream(episode_seed, StreamPurpose::Noise,
                   static_cast<std::uint64_t>(ctx.t));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w[i] += noise_draw(inst.cfg.noise, rng);
  }
  return w;
}

OracleQuantities oracle_quantities(const EnvironmentInstance& inst,
                                   const RoundContext& ctx,
                                   const RewardFunction& f) {
  const Vec w_star = ctx.base_features.transpose() * inst.theta_star;
  ActionSet base_best = argmax_super_arm(f, w_star, inst.cfg.K);
  Vec w(base_best.arms.size());
  for (std::size_t i = 0; i < base_best.arms.size(); ++i) {
    w[i] = w_star[base_best.arms[i]];
  }
  const double base_value = evaluate(f, w);

  OracleQuantities oq;
  if (inst.mu0_true > base_value) {
    oq.best_action = ActionSet::conservative();
    oq.best_value = inst.mu0_true;
  } else {
    oq.best_action = std::move(base_best);
    oq.best_value = base_value;
  }
  oq.gap_to_mu0 = oq.best_value - inst.mu0_true;
  return oq;
}

namespace {

nlohmann::json vec_to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vec vec_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string reward_name(RewardId id) {
  return id == RewardId::LinearSum ? "linear_sum" : "saturating_concave";
}

RewardId reward_from_name(const std::string& s) {
  if (s == "linear_sum") return RewardId::LinearSum;
  if (s == "saturating_concave") return RewardId::SaturatingConcave;
  throw std::invalid_argument("unknown reward function: " + s);
}

}  // namespace

nlohmann::json instance_to_json(const EnvironmentInstance& inst) {
  const GenConfig& c = inst.cfg;
  nlohmann::json j;
  j["seed"] = inst.seed;
  j["config"] = {
      {"M", c.M},
      {"d", c.d},
      {"K", c.K},
      {"S", c.S},
      {"L", c.L},
      {"conservative_set_size", c.conservative_set_size},
      {"bracket_lo_rank", c.bracket_lo_rank},
      {"bracket_hi_rank", c.bracket_hi_rank},
      {"noise",
       {{"kind", c.noise.kind == NoiseKind::Gaussian ? "gaussian" : "uniform"},
        {"param", c.noise.param}}},
      {"feature_law",
       c.feature_law == FeatureLaw::UniformSymmetric ? "uniform_symmetric"
                                                     : "uniform_positive"},
      {"reward_function",
       {{"id", reward_name(c.reward.id)}, {"scale", c.reward.scale}}},
  };
  j["theta_star"] = vec_to_json(inst.theta_star);
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index a = 0; a < inst.conservative_features.cols(); ++a) {
    cols.push_back(vec_to_json(inst.conservative_features.col(a)));
  }
  j["conservative_features"] = cols;
  j["reference_weights"] = vec_to_json(inst.reference_weights);
  j["mu0_true"] = inst.mu0_true;
  return j;
}

EnvironmentInstance instance_from_json(const nlohmann::json& j) {
  EnvironmentInstance inst;
  const auto& c = j.at("config");
  inst.cfg.M = c.at("M").get<int>();
  inst.cfg.d = c.at("d").get<int>();
  inst.cfg.K = c.at("K").get<int>();
  inst.cfg.S = c.at("S").get<double>();
  inst.cfg.L = c.at("L").get<double>();
  inst.cfg.conservative_set_size = c.at("conservative_set_size").get<int>();
  inst.cfg.bracket_lo_rank = c.at("bracket_lo_rank").get<int>();
  inst.cfg.bracket_hi_rank = c.at("bracket_hi_rank").get<int>();
  inst.cfg.noise.kind = c.at("noise").at("kind").get<std::string>() == "gaussian"
                            ? NoiseKind::Gaussian
                            : NoiseKind::UniformBounded;
  inst.cfg.noise.param = c.at("noise").at("param").get<double>();
  inst.cfg.feature_law =
      c.at("feature_law").get<std::string>() == "uniform_symmetric"
          ? FeatureLaw::UniformSymmetric
          : FeatureLaw::UniformPositive;
  inst.cfg.reward.id =
      reward_from_name(c.at("reward_function").at("id").get<std::string>());
  inst.cfg.reward.scale = c.at("reward_function").at("scale").get<double>();
  inst.cfg = resolve_gen_config(inst.cfg);

  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.theta_star = vec_from_json(j.at("theta_star"));
  const auto& cols = j.at("conservative_features");
  inst.conservative_features =
      Mat(inst.cfg.d, static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index a = 0; a < inst.conservative_features.cols(); ++a) {
    inst.conservative_features.col(a) = vec_from_json(cols[a]);
  }
  inst.reference_weights = vec_from_json(j.at("reference_weights"));
  inst.mu0_true = j.at("mu0_true").get<double>();
  return inst;
}

}  // namespace ccb
