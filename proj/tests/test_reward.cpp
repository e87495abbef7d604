#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccb/reward.hpp"
#include "ccb/rng.hpp"

#include <cmath>

using namespace ccb;

namespace {
Vec make_vec(std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}
}  // namespace

TEST_CASE("evaluate: linear sum") {
  RewardFunction f;
  CHECK(evaluate(f, make_vec({1.0, 2.0})) == doctest::Approx(3.0));
  CHECK(evaluate(f, make_vec({0.0, 0.0, 0.0})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(evaluate(f, Vec()), std::invalid_argument);
}

TEST_CASE("evaluate: saturating concave") {
  RewardFunction f{RewardId::SaturatingConcave, 10.0};
  CHECK(evaluate(f, make_vec({5.0, 5.0})) ==
        doctest::Approx(6.32120558828557678).epsilon(1e-14));
  CHECK(evaluate(f, make_vec({0.0})) == doctest::Approx(0.0));
}

TEST_CASE("lipschitz_constant") {
  RewardFunction lin;
  CHECK(lipschitz_constant(lin, 1) == doctest::Approx(1.0));
  CHECK(lipschitz_constant(lin, 4) == doctest::Approx(2.0));
  RewardFunction sat{RewardId::SaturatingConcave, 3.0};
  CHECK(lipschitz_constant(sat, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(lipschitz_constant(lin, 0), std::invalid_argument);
}

TEST_CASE("sampled difference quotients never exceed the declared constant") {
  RewardFunction sat{RewardId::SaturatingConcave, 2.5};
  Rng rng(31337);
  const int k = 2;
  const double P = lipschitz_constant(sat, k);
  for (int i = 0; i < 5000; ++i) {
    Vec a(k), b(k);
    for (int j = 0; j < k; ++j) {
      a[j] = rng.uniform(0.0, 5.0);
      b[j] = rng.uniform(0.0, 5.0);
    }
    const double diff = std::abs(evaluate(sat, a) - evaluate(sat, b));
    CHECK(diff <= P * (a - b).norm() + 1e-12);
  }
}

TEST_CASE("monotonicity probe on random pairs") {
  Rng rng(55);
  RewardFunction fs[2] = {RewardFunction{},
                          RewardFunction{RewardId::SaturatingConcave, 4.0}};
  for (const auto& f : fs) {
    for (int i = 0; i < 10000; ++i) {
      const int k = 1 + static_cast<int>(rng.next_u64() % 5);
      Vec lo(k), hi(k);
      for (int j = 0; j < k; ++j) {
        lo[j] = rng.uniform(0.0, 3.0);
        hi[j] = lo[j] + rng.uniform(0.0, 2.0);
      }
      CHECK(evaluate(f, lo) <= evaluate(f, hi) + 1e-12);
    }
  }
}

TEST_CASE("lipschitz probe on random pairs") {
  Rng rng(56);
  RewardFunction fs[2] = {RewardFunction{},
                          RewardFunction{RewardId::SaturatingConcave, 4.0}};
  for (const auto& f : fs) {
    for (int i = 0; i < 10000; ++i) {
      const int k = 1 + static_cast<int>(rng.next_u64() % 5);
      Vec a(k), b(k);
      for (int j = 0; j < k; ++j) {
        a[j] = rng.uniform(0.0, 3.0);
        b[j] = rng.uniform(0.0, 3.0);
      }
      const double P = lipschitz_constant(f, k);
      CHECK(std::abs(evaluate(f, a) - evaluate(f, b)) <=
            P * (a - b).norm() + 1e-12);
    }
  }
}

TEST_CASE("argmax_super_arm: documented cases") {
  RewardFunction f;
  CHECK(argmax_super_arm(f, make_vec({5.0, 1.0, 3.0}), 2) ==
        ActionSet::base({0, 2}));
  CHECK(argmax_super_arm(f, make_vec({2.0, 2.0, 2.0}), 2) ==
        ActionSet::base({0, 1}));
  // all clamped to zero: single lowest-id arm
  CHECK(argmax_super_arm(f, make_vec({0.0, 0.0}), 2) == ActionSet::base({0}));
  // negative values are not taken along
  CHECK(argmax_super_arm(f, make_vec({-1.0, 4.0, -2.0}), 3) ==
        ActionSet::base({1}));
  CHECK_THROWS_AS(argmax_super_arm(f, Vec(), 2), std::invalid_argument);
  CHECK_THROWS_AS(argmax_super_arm(f, make_vec({1.0}), 0), std::invalid_argument);
  Vec bad = make_vec({1.0, std::nan("")});
  CHECK_THROWS_AS(argmax_super_arm(f, bad, 1), std::invalid_argument);
}

TEST_CASE("brute_force_argmax: documented cases") {
  RewardFunction f;
  CHECK(brute_force_argmax(f, make_vec({1.0, 1.0, 1.0}), 3) ==
        ActionSet::base({0, 1, 2}));
  CHECK(brute_force_argmax(f, make_vec({-0.5}), 1) == ActionSet::base({0}));
  const auto best = brute_force_argmax(f, make_vec({0.3, 0.9, 0.1, 0.8}), 2);
  CHECK(best == ActionSet::base({1, 3}));
  Vec w(2);
  w << 0.9, 0.8;
  CHECK(evaluate(f, w) == doctest::Approx(1.7));
  Vec big(21);
  big.setOnes();
  CHECK_THROWS_AS(brute_force_argmax(f, big, 2), std::invalid_argument);
}

TEST_CASE("greedy equals brute force in f-value on 1000 random instances") {
  Rng rng(2024);
  RewardFunction lin;
  RewardFunction sat{RewardId::SaturatingConcave, 2.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.next_u64() % 12);
    const int K = 1 + static_cast<int>(rng.next_u64() % 3);
    Vec u(m);
    for (int i = 0; i < m; ++i) u[i] = rng.uniform(-1.0, 2.0);
    const RewardFunction& f = (trial % 2 == 0) ? lin : sat;
    const auto greedy = argmax_super_arm(f, u, K);
    const auto brute = brute_force_argmax(f, u, K);
    Vec wg(greedy.arms.size()), wb(brute.arms.size());
    for (std::size_t i = 0; i < greedy.arms.size(); ++i) wg[i] = u[greedy.arms[i]];
    for (std::size_t i = 0; i < brute.arms.size(); ++i) wb[i] = u[brute.arms[i]];
    CHECK(evaluate(f, wg) == evaluate(f, wb));  // exact equality
  }
}

TEST_CASE("ActionSet::base validates") {
  CHECK_THROWS_AS(ActionSet::base({}), std::invalid_argument);
  CHECK_THROWS_AS(ActionSet::base({1, 1}), std::invalid_argument);
  CHECK(ActionSet::base({3, 1, 2}).arms == std::vector<int>({1, 2, 3}));
  CHECK(ActionSet::conservative().is_conservative());
}
