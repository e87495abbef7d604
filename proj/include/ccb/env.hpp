#pragma once

#include "ccb/linalg.hpp"
#include "ccb/reward.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>

namespace ccb {

enum class NoiseKind { Gaussian, UniformBounded };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double param = 1.0;  // sigma (Gaussian) or halfwidth (UniformBounded)
};

enum class FeatureLaw { UniformSymmetric /* U(-1,1)^d */, UniformPositive /* U(0,1)^d */ };

struct GenConfig {
  int M = 20;
  int d = 5;
  int K = 2;
  double S = 0.0;  // ||theta*|| bound; 0 means "resolve to 2*sqrt(d)"
  double L = 0.0;  // ||x||^2 bound;    0 means "resolve to d"
  int conservative_set_size = 0;  // |A0|; 0 means "resolve to K"
  int bracket_lo_rank = 9;        // conservative arm reward >= lo_rank-th best
  int bracket_hi_rank = 8;        // ... and <= hi_rank-th best of a reference draw
  NoiseSpec noise;
  FeatureLaw feature_law = FeatureLaw::UniformSymmetric;
  RewardFunction reward;
};

// Fills the 0/"auto" fields and validates domains; returns the resolved copy.
GenConfig resolve_gen_config(GenConfig cfg);

struct EnvironmentInstance {
  GenConfig cfg;  // resolved
  std::uint64_t seed = 0;
  Vec theta_star;
  Mat conservative_features;  // d x |A0|, fixed for the whole horizon
  Vec reference_weights;      // the expected-weight draw the bracket was taken from
  double mu0_true = 0.0;      // f(A0, theta*^T x0), stationary
};

struct RoundContext {
  int t = 0;
  Mat base_features;          // d x M, resampled each round
  Mat conservative_features;  // d x |A0|, the instance's fixed set
};

EnvironmentInstance generate_instance(const GenConfig& cfg, std::uint64_t seed);

RoundContext sample_round_context(const EnvironmentInstance& inst, int t,
                                  std::uint64_t episode_seed);

// Semi-bandit feedback: realized weights of exactly the played arms, in the
// action's arm order.
Vec realize_weights(const EnvironmentInstance& inst, const RoundContext& ctx,
                    const ActionSet& action, std::uint64_t episode_seed);

// Expected weights of the played arms (harness-side ground truth).
Vec expected_weights(const EnvironmentInstance& inst, const RoundContext& ctx,
                     const ActionSet& action);

struct OracleQuantities {
  ActionSet best_action;
  double best_value = 0.0;
  double gap_to_mu0 = 0.0;  // best_value - mu0_true, >= 0 since A0 is feasible
};

OracleQuantities oracle_quantities(const EnvironmentInstance& inst,
                                   const RoundContext& ctx,
                                   const RewardFunction& f);

// Instance snapshot for replay.
nlohmann::json instance_to_json(const EnvironmentInstance& inst);
EnvironmentInstance instance_from_json(const nlohmann::json& j);

}  // namespace ccb
