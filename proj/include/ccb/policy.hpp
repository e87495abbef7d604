#pragma once

#include "ccb/env.hpp"
#include "ccb/linalg.hpp"
#include "ccb/reward.hpp"

#include <optional>
#include <vector>

namespace ccb {

enum class PolicyKind { CCConUCB, C2UCB, AlwaysConservative };
enum class RecomputeMode { Fresh, Static };

struct PolicyConfig {
  double alpha = 0.2;  // conservatism level, in (0,1)
  int K = 1;
  std::optional<double> mu0;  // present => known conservative reward (Algorithm 1 mode)
  RewardFunction reward;
  RecomputeMode recompute_mode = RecomputeMode::Fresh;
};

// Everything needed to recompute L(t,n) bounds of past optimistic plays:
// the played arms' features (column block per round) plus the lower-bound
// reward frozen at play time for Static mode.
class History {
 public:
  struct Segment {
    int round = 0;
    int offset = 0;
    int len = 0;
    ActionSet action;
    double static_lower_reward = 0.0;  // f(A_n, L_{n,n})
  };

  void append_optimistic(int round, const ActionSet& action,
                         const Mat& arm_features, double static_lower_reward);
  void note_conservative();

  int rounds() const { return rounds_; }
  int conservative_count() const { return conservative_count_; }
  int optimistic_count() const { return static_cast<int>(segments_.size()); }
  int stored_arms() const { return cols_; }
  const std::vector<Segment>& segments() const { return segments_; }
  double static_lower_sum() const { return static_lower_sum_; }
  // d x stored_arms() view of all stored features
  Eigen::Ref<const Mat> feature_block() const;

 private:
  Mat features_;
  int cols_ = 0;
  std::vector<Segment> segments_;
  double static_lower_sum_ = 0.0;
  int conservative_count_ = 0;
  int rounds_ = 0;
};

struct Decision {
  ActionSet action;
  bool was_conservative = false;
  double psi = 0.0;        // lower confidence bound on cumulative reward
  double threshold = 0.0;  // RHS the check compared against
  ActionSet candidate_b;   // the B_t that was considered
};

struct CheckResult {
  double psi = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// B_t: the conservative set if its f-value strictly exceeds the best base
// super arm's UCB value, otherwise the base argmax.
ActionSet select_candidate(const RidgeState& state, const RoundContext& ctx,
                           const PolicyConfig& cfg);

// Algorithm-1 check: psi_t >= (1 - alpha) * t * mu0.
CheckResult constraint_check_known(const History& history, const RidgeState& state,
                                   const ActionSet& candidate,
                                   const RoundContext& ctx,
                                   const PolicyConfig& cfg);

// Algorithm-2 check: both sides anchored to f(A0, U_{t,0}).
CheckResult constraint_check_unknown(const History& history,
                                     const RidgeState& state,
                                     const ActionSet& candidate,
                                     const RoundContext& ctx,
                                     const PolicyConfig& cfg);

// One decision. Pure: the caller ingests observations and updates history.
// CCConUCB ingests only when the check passes; C2UCB always ingests and
// ignores the check (psi/threshold are recorded for audit); AlwaysConservative
// never ingests.
Decision step(PolicyKind kind, const RidgeState& state, const History& history,
              const RoundContext& ctx, const PolicyConfig& cfg);

// Lower-confidence reward f(action, L_{t,t}) of an action under the current
// state; the conservative set evaluates to mu0 in known mode.
double action_lower_reward(const RidgeState& state, const RoundContext& ctx,
                           const ActionSet& action, const PolicyConfig& cfg);

// f(A0, U_{t,0}) from the conservative arms' own upper bounds.
double conservative_upper_reward(const RidgeState& state, const RoundContext& ctx,
                                 const PolicyConfig& cfg);

}  // namespace ccb
