#include "ccb/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ccb {

ActionSet ActionSet::base(std::vector<int> ids) {
  if (ids.empty()) {
    throw std::invalid_argument("ActionSet::base: arm list must be non-empty");
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("ActionSet::base: duplicate arm id");
  }
  ActionSet a;
  a.kind = Kind::Base;
  a.arms = std::move(ids);
  return a;
}

double evaluate_sum(const RewardFunction& f, double sum) {
  switch (f.id) {
    case RewardId::LinearSum:
      return sum;
    case RewardId::SaturatingConcave:
      return f.scale * (1.0 - std::exp(-sum / f.scale));
  }
  throw std::logic_error("evaluate_sum: unknown reward id");
}

double evaluate(const RewardFunction& f, const Vec& weights) {
  if (weights.size() == 0) {
    throw std::invalid_argument("evaluate: empty weight vector");
  }
  return evaluate_sum(f, weights.sum());
}

double lipschitz_constant(const RewardFunction& f, int k) {
  if (k < 1) throw std::invalid_argument("lipschitz_constant: k must be >= 1");
  switch (f.id) {
    case RewardId::LinearSum:
    case RewardId::SaturatingConcave:
      return std::sqrt(static_cast<double>(k));
  }
  throw std::logic_error("lipschitz_constant: unknown reward id");
}

ActionSet argmax_super_arm(const RewardFunction& f, const Vec& ucb_values, int K) {
  const int m = static_cast<int>(ucb_values.size());
  if (m == 0) throw std::invalid_argument("argmax_super_arm: M must be > 0");
  if (K <= 0) throw std::invalid_argument("argmax_super_arm: K must be > 0");
  if (!ucb_values.allFinite()) {
    throw std::invalid_argument("argmax_super_arm: non-finite UCB value");
  }
  (void)f;  // exactness relies on f being increasing in the coordinate sum

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (ucb_values[a] != ucb_values[b]) return ucb_values[a] > ucb_values[b];
    return a < b;
  });

  std::vector<int> chosen;
  for (int id : order) {
    if (static_cast<int>(chosen.size()) >= K) break;
    if (ucb_values[id] > 0.0) chosen.push_back(id);
  }
  if (chosen.empty()) chosen.push_back(order.front());
  return ActionSet::base(std::move(chosen));
}

ActionSet brute_force_argmax(const RewardFunction& f, const Vec& ucb_values, int K) {
  const int m = static_cast<int>(ucb_values.size());
  if (m == 0) throw std::invalid_argument("brute_force_argmax: M must be > 0");
  if (m > 20) {
    throw std::invalid_argument("brute_force_argmax: M > 20 rejected");
  }
  if (K <= 0) throw std::invalid_argument("brute_force_argmax: K must be > 0");

  std::vector<int> best_ids;
  double best_value = 0.0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size > K) continue;
    std::vector<int> ids;
    ids.reserve(size);
    Vec w(size);
    int j = 0;
    for (int id = 0; id < m; ++id) {
      if (mask & (1u << id)) {
        ids.push_back(id);
        w[j++] = ucb_values[id];
      }
    }
    const double value = evaluate(f, w);
    const bool better =
        best_ids.empty() || value > best_value ||
        (value == best_value &&
         std::lexicographical_compare(ids.begin(), ids.end(), best_ids.begin(),
                                      best_ids.end()));
    if (better) {
      best_value = value;
      best_ids = std::move(ids);
    }
  }
  return ActionSet::base(std::move(best_ids));
}

}  // namespace ccb
