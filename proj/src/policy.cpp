#include "ccb/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace ccb {

void History::append_optimistic(int round, const ActionSet& action,
                                const Mat& arm_features,
                                double static_lower_reward) {
  const int len = static_cast<int>(arm_features.cols());
  if (len <= 0) {
    throw std::invalid_argument("History::append_optimistic: empty feature block");
  }
  if (features_.rows() == 0) {
    features_ = Mat(arm_features.rows(), std::max(16, 2 * len));
  }
  if (features_.rows() != arm_features.rows()) {
    throw std::invalid_argument("History::append_optimistic: dimension mismatch");
  }
  if (cols_ + len > features_.cols()) {
    const Eigen::Index grown = std::max<Eigen::Index>(
        features_.cols() * 2, cols_ + len);
    features_.conservativeResize(Eigen::NoChange, grown);
  }
  features_.middleCols(cols_, len) = arm_features;
  segments_.push_back(Segment{round, cols_, len, action, static_lower_reward});
  cols_ += len;
  static_lower_sum_ += static_lower_reward;
  ++rounds_;
}

void History::note_conservative() {
  ++conservative_count_;
  ++rounds_;
}

Eigen::Ref<const Mat> History::feature_block() const {
  return features_.leftCols(cols_);
}

namespace {

void check_ctx(const RidgeState& state, const RoundContext& ctx,
               const History* history) {
  if (ctx.base_features.rows() != state.d ||
      ctx.conservative_features.rows() != state.d) {
    throw std::invalid_argument("policy: context dimension != state dimension");
  }
  if (history && ctx.t != history->rounds() + 1) {
    throw std::invalid_argument("policy: context round index != history rounds + 1");
  }
}

// Sum over past optimistic rounds of f(A_n, L(t,n)). Fresh mode recomputes
// the clamped lower bounds from stored features under the current state;
// Static mode reads the values frozen at play time.
double history_lower_sum(const History& h, const RidgeState& state,
                         const PolicyConfig& cfg) {
  if (cfg.recompute_mode == RecomputeMode::Static || h.stored_arms() == 0) {
    return h.static_lower_sum();
  }
  const BatchBounds bb = batch_bounds(state, h.feature_block());
  double total = 0.0;
  for (const auto& seg : h.segments()) {
    total += evaluate_sum(cfg.reward, bb.lower.segment(seg.offset, seg.len).sum());
  }
  return total;
}

struct CandidateInfo {
  ActionSet candidate;
  ActionSet base_argmax;
  BatchBounds base_bounds;
};

CandidateInfo candidate_info(const RidgeState& state, const RoundContext& ctx,
                             const PolicyConfig& cfg, bool consider_conservative) {
  CandidateInfo info;
  info.base_bounds = batch_bounds(state, ctx.base_features);
  info.base_argmax = argmax_super_arm(cfg.reward, info.base_bounds.upper, cfg.K);
  info.candidate = info.base_argmax;
  if (consider_conservative) {
    Vec w(info.base_argmax.arms.size());
    for (std::size_t i = 0; i < info.base_argmax.arms.size(); ++i) {
      w[i] = info.base_bounds.upper[info.base_argmax.arms[i]];
    }
    const double best_base = evaluate(cfg.reward, w);
    const double cons_value = cfg.mu0.has_value()
                                  ? *cfg.mu0
                                  : conservative_upper_reward(state, ctx, cfg);
    if (cons_value > best_base) info.candidate = ActionSet::conservative();
  }
  return info;
}

CheckResult constraint_check(const History& history, const RidgeState& state,
                             const ActionSet& candidate, const RoundContext& ctx,
                             const PolicyConfig& cfg) {
  const int t = ctx.t;
  const double past = history_lower_sum(history, state, cfg);
  const double current = action_lower_reward(state, ctx, candidate, cfg);
  const double baseline = cfg.mu0.has_value()
                              ? *cfg.mu0
                              : conservative_upper_reward(state, ctx, cfg);
  CheckResult r;
  r.psi = past + current + history.conservative_count() * baseline;
  r.threshold = (1.0 - cfg.alpha) * t * baseline;
  r.pass = r.psi >= r.threshold;
  return r;
}

}  // namespace

double conservative_upper_reward(const RidgeState& state, const RoundContext& ctx,
                                 const PolicyConfig& cfg) {
  const BatchBounds bb = batch_bounds(state, ctx.conservative_features);
  return evaluate_sum(cfg.reward, bb.upper.sum());
}

double action_lower_reward(const RidgeState& state, const RoundContext& ctx,
                           const ActionSet& action, const PolicyConfig& cfg) {
  if (action.is_conservative()) {
    if (cfg.mu0.has_value()) return *cfg.mu0;
    const BatchBounds bb = batch_bounds(state, ctx.conservative_features);
    return evaluate_sum(cfg.reward, bb.lower.sum());
  }
  const BatchBounds bb = batch_bounds(state, ctx.base_features);
  double sum = 0.0;
  for (int arm : action.arms) sum += bb.lower[arm];
  return evaluate_sum(cfg.reward, sum);
}

ActionSet select_candidate(const RidgeState& state, const RoundContext& ctx,
                           const PolicyConfig& cfg) {
  check_ctx(state, ctx, nullptr);
  return candidate_info(state, ctx, cfg, true).candidate;
}

CheckResult constraint_check_known(const History& history, const RidgeState& state,
                                   const ActionSet& candidate,
                                   const RoundContext& ctx,
                                   const PolicyConfig& cfg) {
  if (!cfg.mu0.has_value()) {
    throw std::invalid_argument("constraint_check_known: cfg.mu0 absent");
  }
  check_ctx(state, ctx, &history);
  return constraint_check(history, state, candidate, ctx, cfg);
}

CheckResult constraint_check_unknown(const History& history,
                                     const RidgeState& state,
                                     const ActionSet& candidate,
                                     const RoundContext& ctx,
                                     const PolicyConfig& cfg) {
  if (cfg.mu0.has_value()) {
    throw std::invalid_argument(
        "constraint_check_unknown: cfg.mu0 present; use the known-mode check");
  }
  check_ctx(state, ctx, &history);
  return constraint_check(history, state, candidate, ctx, cfg);
}

Decision step(PolicyKind kind, const RidgeState& state, const History& history,
              const RoundContext& ctx, const PolicyConfig& cfg) {
  check_ctx(state, ctx, &history);
  Decision dec;
  switch (kind) {
    case PolicyKind::CCConUCB: {
      const CandidateInfo info = candidate_info(state, ctx, cfg, true);
      const CheckResult chk =
          constraint_check(history, state, info.candidate, ctx, cfg);
      dec.candidate_b = info.candidate;
      dec.psi = chk.psi;
      dec.threshold = chk.threshold;
      dec.was_conservative = !chk.pass;
      dec.action = chk.pass ? info.candidate : ActionSet::conservative();
      return dec;
    }
    case PolicyKind::C2UCB: {
      const CandidateInfo info = candidate_info(state, ctx, cfg, false);
      const CheckResult chk =
          constraint_check(history, state, info.base_argmax, ctx, cfg);
      dec.candidate_b = info.base_argmax;
      dec.psi = chk.psi;
      dec.threshold = chk.threshold;
      dec.was_conservative = false;
      dec.action = info.base_argmax;
      return dec;
    }
    case PolicyKind::AlwaysConservative: {
      const ActionSet a0 = ActionSet::conservative();
      const CheckResult chk = constraint_check(history, state, a0, ctx, cfg);
      dec.candidate_b = a0;
      dec.psi = chk.psi;
      dec.threshold = chk.threshold;
      dec.was_conservative = true;
      dec.action = a0;
      return dec;
    }
  }
  throw std::logic_error("step: unknown policy kind");
}

}  // namespace ccb
