#pragma once

#include "ccb/linalg.hpp"

#include <vector>

namespace ccb {

// Set reward f(A, w) = f_tilde(w|_A). Both shipped functions are strictly
// increasing in the coordinate sum, which is what makes the greedy top-K
// argmax exact; anything added here must preserve that or bring its own
// oracle.
enum class RewardId { LinearSum, SaturatingConcave };

struct RewardFunction {
  RewardId id = RewardId::LinearSum;
  double scale = 1.0;  // SaturatingConcave saturation constant c > 0
};

// A super arm: the fixed conservative set A0, or up to K base arms.
struct ActionSet {
  enum class Kind { Conservative, Base };
  Kind kind = Kind::Conservative;
  std::vector<int> arms;  // sorted distinct ids, empty when Conservative

  static ActionSet conservative() { return ActionSet{}; }
  static ActionSet base(std::vector<int> ids);
  bool is_conservative() const { return kind == Kind::Conservative; }
  bool operator==(const ActionSet&) const = default;
};

// f_tilde on the restriction w|_A (weights listed in the action's arm order).
double evaluate(const RewardFunction& f, const Vec& weights);

// f_tilde as a function of the coordinate sum (both shipped rewards factor
// through it).
double evaluate_sum(const RewardFunction& f, double sum);

// Lipschitz constant P(k) for subsets of size k.
double lipschitz_constant(const RewardFunction& f, int k);

// Exact maximizer of f(A, U) over base super arms with 1 <= |A| <= K.
// Greedy: take positive-valued arms in decreasing value order, at least one
// arm always included. Ties break toward the lowest arm id.
ActionSet argmax_super_arm(const RewardFunction& f, const Vec& ucb_values, int K);

// Exhaustive oracle over all non-empty subsets of size <= K (M <= 20).
// Tie-break: lowest-id-lexicographic.
ActionSet brute_force_argmax(const RewardFunction& f, const Vec& ucb_values, int K);

}  // namespace ccb
