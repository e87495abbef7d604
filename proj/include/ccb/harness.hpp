#pragma once

#include "ccb/env.hpp"
#include "ccb/policy.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ccb {

struct RidgeParams {
  double lambda = 1.0;
  double delta = 0.1;
  long refresh_every = 1000;
};

struct RoundRecord {
  int t = 0;
  ActionSet action;
  bool was_conservative = false;
  std::vector<double> weights;    // realized, in action-arm order
  double expected_reward = 0.0;   // f(A_t, w*_t)
  double optimal_reward = 0.0;    // f(A*_t, w*_t)
  double psi = 0.0;
  double threshold = 0.0;
};

struct EpisodeMeta {
  std::string policy;  // "ccconucb_known" | "ccconucb_unknown" | "c2ucb" | "always_conservative"
  PolicyKind kind = PolicyKind::CCConUCB;
  bool mu0_known = false;
  double alpha = 0.0;
  int T = 0;
  RidgeParams ridge;
  RecomputeMode recompute_mode = RecomputeMode::Fresh;
  GenConfig gen;  // resolved environment configuration
  std::uint64_t instance_seed = 0;
  std::uint64_t episode_seed = 0;
  double mu0_true = 0.0;
};

// True iff two logs are comparable (identical everything except seeds).
bool same_shape(const EpisodeMeta& a, const EpisodeMeta& b);

struct RunLog {
  EpisodeMeta meta;
  std::vector<RoundRecord> records;
};

struct ProbeOptions {
  bool enabled = true;
  bool coverage = false;  // per-round containment check against theta*
  int cadence = 0;        // rounds between heavy probes; 0 = auto (1, or 50 past T=10^4)
};

// Per-round state quantities recorded for the analytic probes. Heavy fields
// (norm_sum, coverage) are NaN/absent off the probe cadence.
struct TraceRow {
  int t = 0;
  long n_t = 0;
  long d_t = 0;
  double log_det_V = 0.0;
  double norm_sum = std::numeric_limits<double>::quiet_NaN();
  bool conservative = false;
  double baseline = std::numeric_limits<double>::quiet_NaN();  // mu0 or f(A0, U_{t,0})
  bool coverage_checked = false;
  bool coverage_violation = false;
};

struct StateTrace {
  PolicyKind kind = PolicyKind::CCConUCB;
  bool mu0_known = false;
  int cadence = 1;
  bool coverage_enabled = false;
  std::vector<TraceRow> rows;
  double min_gap = 0.0;  // realized min over rounds of f(A*_t,w*_t) - mu0
  long unknown_precondition_rounds = 0;  // conservative rounds with d_{t-1} >= (1-alpha) t
};

struct EpisodeResult {
  RunLog log;
  StateTrace trace;
};

EpisodeResult run_episode(const EnvironmentInstance& inst, PolicyKind kind,
                          const PolicyConfig& cfg, const RidgeParams& ridge,
                          int T, std::uint64_t episode_seed,
                          const ProbeOptions& probes = {});

// ---- Metrics -------------------------------------------------------------

// Cumulative pseudo-regret r_t = sum_{s<=t} [f(A*_s,w*_s) - f(A_s,w*_s)].
std::vector<double> pseudo_regret(const RunLog& log);

// Rounds violating the revenue constraint in its true-expectation form.
long constraint_violations(const RunLog& log, double alpha, double mu0_true);

// Alternative counter against realized rewards (convention comparison only).
long constraint_violations_realized(const RunLog& log, double alpha,
                                    double mu0_true);

// (n_T, d_T)
std::pair<long, long> selection_counts(const RunLog& log);

// First round where the candidate policy's cumulative expected reward strictly
// exceeds the always-conservative one's; absent if never within T.
std::optional<int> endurance_time(const RunLog& ccc_log, const RunLog& cons_log);

// ---- Probes ---------------------------------------------------------------

inline constexpr double kProbeTolerance = 1e-9;

struct ProbeReport {
  std::string name;
  long rounds_checked = 0;
  double max_violation = -std::numeric_limits<double>::infinity();
  bool pass = true;
  std::string note;
};

struct ProbeParams {
  int d = 0;
  int K = 0;
  double L = 0.0;
  double lambda = 0.0;
  double S = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double mu0 = 0.0;
  double P = 0.0;  // Lipschitz constant at subset size K
};

ProbeParams probe_params_from_meta(const EpisodeMeta& meta);

// Closed-form radius C_t = sqrt(lambda)S + sqrt(2 log(1/delta) + d log(1 + KLt/(lambda d))).
double closed_form_radius(const ProbeParams& p, long t);

// det bound: log det V_t <= d log(lambda + n_t K L / d).
ProbeReport probe_lemma2(const StateTrace& trace, const ProbeParams& p);

// norm-sum bounds: sum <= min(L4, L5); also reports how often the tighter
// bound matches the n_t K <= d rule of thumb.
ProbeReport probe_norm_sums(const StateTrace& trace, const ProbeParams& p);

// Conservative-round bound in its derivation form: at every conservative
// round, d_t - 1 < ([1-(1+n_t)alpha] b - n_t Dmin + 2 P C_{t-1} sqrt(n_t S_t)) / (alpha b),
// with b = mu0 (known) or the round's f(A0, U_{t,0}) (unknown).
ProbeReport probe_lemma6(const StateTrace& trace, const ProbeParams& p);

// Fraction of episodes with any containment failure must stay within
// delta + 2 sqrt(delta(1-delta)/R).
ProbeReport probe_confidence_coverage(const std::vector<StateTrace>& traces,
                                      double delta);

// ---- Aggregation / serialization -------------------------------------------

struct AggregateRow {
  int t = 0;
  double mean_avg_regret = 0.0;
  double std_avg_regret = 0.0;
  std::string policy;
};

std::vector<AggregateRow> aggregate(const std::vector<RunLog>& logs);

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

void write_runlog_ndjson(std::ostream& os, const RunLog& log);
std::string runlog_to_ndjson(const RunLog& log);

nlohmann::json probe_report_to_json(const ProbeReport& report);

// ---- Parallel episodes -----------------------------------------------------

// Runs fn(0..n-1) on `workers` threads (0 = hardware concurrency). The first
// exception thrown by a task is rethrown after all threads join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace ccb
