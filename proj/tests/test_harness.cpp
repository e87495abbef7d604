#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccb/harness.hpp"

#include <cmath>

using namespace ccb;

namespace {

GenConfig desk_config() {
  GenConfig g;
  g.M = 20;
  g.d = 5;
  g.K = 2;
  return resolve_gen_config(g);
}

PolicyConfig desk_policy(const EnvironmentInstance& inst, bool known,
                         double alpha = 0.2) {
  PolicyConfig cfg;
  cfg.alpha = alpha;
  cfg.K = inst.cfg.K;
  cfg.reward = inst.cfg.reward;
  if (known) cfg.mu0 = inst.mu0_true;
  return cfg;
}

RunLog fabricated_log(const std::vector<double>& expected,
                      const std::vector<double>& optimal) {
  RunLog log;
  log.meta.T = static_cast<int>(expected.size());
  log.meta.policy = "fabricated";
  for (std::size_t i = 0; i < expected.size(); ++i) {
    RoundRecord rec;
    rec.t = static_cast<int>(i) + 1;
    rec.action = ActionSet::base({0});
    rec.expected_reward = expected[i];
    rec.optimal_reward = optimal[i];
    rec.weights = {expected[i]};
    log.records.push_back(rec);
  }
  return log;
}

}  // namespace

TEST_CASE("always-conservative episode: every record is conservative") {
  const auto inst = generate_instance(desk_config(), 5);
  const auto res = run_episode(inst, PolicyKind::AlwaysConservative,
                               desk_policy(inst, true), RidgeParams{}, 50, 5);
  CHECK(res.log.records.size() == 50);
  for (const auto& rec : res.log.records) {
    CHECK(rec.was_conservative);
    CHECK(rec.action.is_conservative());
    CHECK(rec.expected_reward == doctest::Approx(inst.mu0_true));
    CHECK(rec.optimal_reward - inst.mu0_true >= -1e-12);
  }
  const auto [n, d] = selection_counts(res.log);
  CHECK(n == 0);
  CHECK(d == 50);
  CHECK(constraint_violations(res.log, 0.2, inst.mu0_true) == 0);
  CHECK(constraint_violations(res.log, 0.9, inst.mu0_true) == 0);
  // regret increments are exactly the per-round gaps
  const auto regret = pseudo_regret(res.log);
  double expect = 0.0;
  for (std::size_t i = 0; i < res.log.records.size(); ++i) {
    expect += res.log.records[i].optimal_reward - inst.mu0_true;
    CHECK(regret[i] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("T=1 CCConUCB-known with uninformative state is conservative") {
  const auto inst = generate_instance(desk_config(), 6);
  const auto res = run_episode(inst, PolicyKind::CCConUCB,
                               desk_policy(inst, true), RidgeParams{}, 1, 6);
  REQUIRE(res.log.records.size() == 1);
  CHECK(res.log.records[0].was_conservative);
  CHECK(res.log.records[0].action.is_conservative());
}

TEST_CASE("identical seeds and configs give byte-identical NDJSON") {
  const auto inst = generate_instance(desk_config(), 9);
  const auto cfg = desk_policy(inst, true);
  const auto a =
      run_episode(inst, PolicyKind::CCConUCB, cfg, RidgeParams{}, 200, 9);
  const auto b =
      run_episode(inst, PolicyKind::CCConUCB, cfg, RidgeParams{}, 200, 9);
  CHECK(runlog_to_ndjson(a.log) == runlog_to_ndjson(b.log));
}

TEST_CASE("pseudo-regret is non-negative and non-decreasing") {
  const auto inst = generate_instance(desk_config(), 10);
  for (auto kind : {PolicyKind::CCConUCB, PolicyKind::C2UCB}) {
    const auto res =
        run_episode(inst, kind, desk_policy(inst, true), RidgeParams{}, 300, 10);
    const auto regret = pseudo_regret(res.log);
    double prev = 0.0;
    for (double r : regret) {
      CHECK(r >= prev - 1e-12);
      prev = r;
    }
    const auto [n, d] = selection_counts(res.log);
    CHECK(n + d == 300);
  }
}

TEST_CASE("conservative rounds leave the ridge state untouched") {
  const auto inst = generate_instance(desk_config(), 12);
  const auto res = run_episode(inst, PolicyKind::CCConUCB,
                               desk_policy(inst, true), RidgeParams{}, 400, 12);
  const auto& rows = res.trace.rows;
  REQUIRE(!rows.empty());
  bool saw_conservative_after_start = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].conservative) {
      CHECK(rows[i].log_det_V == rows[i - 1].log_det_V);  // bitwise
      CHECK(rows[i].n_t == rows[i - 1].n_t);
      saw_conservative_after_start = true;
    }
  }
  CHECK(saw_conservative_after_start);
  // decision invariant, recorded per round
  for (const auto& rec : res.log.records) {
    CHECK(rec.was_conservative == (rec.psi < rec.threshold));
  }
}

TEST_CASE("CCConUCB with mu0 = 0 runs in lockstep with C2UCB") {
  const auto inst = generate_instance(desk_config(), 13);
  auto cfg = desk_policy(inst, true);
  cfg.mu0 = 0.0;  // the check always passes: identical ingests round by round
  const auto ccc =
      run_episode(inst, PolicyKind::CCConUCB, cfg, RidgeParams{}, 250, 13);
  const auto c2 =
      run_episode(inst, PolicyKind::C2UCB, cfg, RidgeParams{}, 250, 13);
  for (int t = 0; t < 250; ++t) {
    CHECK(ccc.log.records[t].action == c2.log.records[t].action);
    CHECK(ccc.log.records[t].weights == c2.log.records[t].weights);
  }
}

TEST_CASE("analytic probes pass on desk-scale episodes") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const auto inst = generate_instance(desk_config(), seed);
    for (bool known : {true, false}) {
      const auto res =
          run_episode(inst, PolicyKind::CCConUCB, desk_policy(inst, known),
                      RidgeParams{}, 500, seed);
      const auto p = probe_params_from_meta(res.log.meta);
      const auto l2 = probe_lemma2(res.trace, p);
      CHECK(l2.pass);
      CHECK(l2.rounds_checked == 500);
      const auto l45 = probe_norm_sums(res.trace, p);
      CHECK(l45.pass);
      CHECK(l45.max_violation <= kProbeTolerance);
      const auto l6 = probe_lemma6(res.trace, p);
      CHECK(l6.pass);
      CHECK(l6.rounds_checked > 0);  // early rounds are conservative
    }
  }
}

TEST_CASE("lemma6 probe is not applicable to baselines") {
  const auto inst = generate_instance(desk_config(), 31);
  const auto res = run_episode(inst, PolicyKind::C2UCB, desk_policy(inst, true),
                               RidgeParams{}, 100, 31);
  const auto rep = probe_lemma6(res.trace, probe_params_from_meta(res.log.meta));
  CHECK(rep.rounds_checked == 0);
  CHECK(rep.pass);
}

TEST_CASE("coverage probe: noiseless episodes never fail containment") {
  GenConfig g = desk_config();
  g.noise.param = 0.0;
  ProbeOptions popt;
  popt.coverage = true;
  std::vector<StateTrace> traces;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = generate_instance(g, seed);
    auto res = run_episode(inst, PolicyKind::CCConUCB, desk_policy(inst, true),
                           RidgeParams{}, 60, seed, popt);
    traces.push_back(std::move(res.trace));
  }
  const auto rep = probe_confidence_coverage(traces, 0.1);
  CHECK(rep.pass);
  CHECK(rep.max_violation <= -0.1);  // zero failures, full slack left
  CHECK_THROWS_AS(probe_confidence_coverage({}, 0.1), std::invalid_argument);
}

TEST_CASE("coverage direction: widening the radius removes failures") {
  GenConfig g = desk_config();
  ProbeOptions popt;
  popt.coverage = true;
  long tight_failures = 0, wide_failures = 0;
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const auto inst = generate_instance(g, seed);
    RidgeParams tight;
    tight.delta = 0.5;  // narrow intervals
    RidgeParams wide;
    wide.delta = 1e-8;  // much wider radius
    auto cfg = desk_policy(inst, true);
    const auto rt = run_episode(inst, PolicyKind::CCConUCB, cfg, tight, 80,
                                seed, popt);
    const auto rw = run_episode(inst, PolicyKind::CCConUCB, cfg, wide, 80,
                                seed, popt);
    for (const auto& row : rt.trace.rows) {
      if (row.coverage_violation) {
        ++tight_failures;
        break;
      }
    }
    for (const auto& row : rw.trace.rows) {
      if (row.coverage_violation) {
        ++wide_failures;
        break;
      }
    }
  }
  CHECK(wide_failures == 0);
  CHECK(wide_failures <= tight_failures);
}

TEST_CASE("endurance time edge cases") {
  const auto same = fabricated_log({1.0, 1.0, 1.0}, {2.0, 2.0, 2.0});
  CHECK(!endurance_time(same, same).has_value());

  const auto cons = fabricated_log({1.0, 1.0, 1.0}, {2.0, 2.0, 2.0});
  const auto better = fabricated_log({1.5, 1.5, 1.5}, {2.0, 2.0, 2.0});
  const auto et = endurance_time(better, cons);
  REQUIRE(et.has_value());
  CHECK(*et == 1);

  const auto late = fabricated_log({0.5, 1.4, 1.4}, {2.0, 2.0, 2.0});
  const auto et2 = endurance_time(late, cons);
  REQUIRE(et2.has_value());
  CHECK(*et2 == 3);  // cumulative: 0.5, 1.9, 3.3 vs 1, 2, 3

  const auto shorter = fabricated_log({1.0}, {2.0});
  CHECK_THROWS_AS(endurance_time(shorter, cons), std::invalid_argument);
}

TEST_CASE("constraint violation counters") {
  // expected rewards 0,0,3,3,... vs mu0=1: cumulative 0,0,3,6
  const auto log = fabricated_log({0.0, 0.0, 3.0, 3.0}, {3.0, 3.0, 3.0, 3.0});
  CHECK(constraint_violations(log, 0.5, 1.0) == 2);   // rounds 1,2
  CHECK(constraint_violations(log, 0.99, 1.0) == 2);  // thresholds ~0 but cum=0 < t*0.01
  CHECK(constraint_violations_realized(log, 0.5, 1.0) == 2);
}

TEST_CASE("aggregate: mean/std edge cases and heterogeneity") {
  const auto inst = generate_instance(desk_config(), 40);
  const auto cfg = desk_policy(inst, true);
  auto r1 = run_episode(inst, PolicyKind::CCConUCB, cfg, RidgeParams{}, 50, 40);
  const auto single = aggregate({r1.log});
  CHECK(single.size() == 50);
  CHECK(single.back().std_avg_regret == doctest::Approx(0.0));
  const auto regret = pseudo_regret(r1.log);
  CHECK(single.back().mean_avg_regret ==
        doctest::Approx(regret.back() / 50.0).epsilon(1e-12));

  const auto twice = aggregate({r1.log, r1.log});
  CHECK(twice.back().std_avg_regret == doctest::Approx(0.0));

  auto other = run_episode(inst, PolicyKind::CCConUCB,
                           desk_policy(inst, true, 0.5), RidgeParams{}, 50, 40);
  CHECK_THROWS_AS(aggregate({r1.log, other.log}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("static recompute mode also yields safe-looking runs") {
  const auto inst = generate_instance(desk_config(), 44);
  auto cfg = desk_policy(inst, true);
  cfg.recompute_mode = RecomputeMode::Static;
  const auto res =
      run_episode(inst, PolicyKind::CCConUCB, cfg, RidgeParams{}, 300, 44);
  const auto [n, d] = selection_counts(res.log);
  CHECK(n + d == 300);
  for (const auto& rec : res.log.records) {
    CHECK(rec.was_conservative == (rec.psi < rec.threshold));
  }
}
