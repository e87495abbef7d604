#include "ccb/harness.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ccb {

namespace {

std::string policy_label(PolicyKind kind, bool mu0_known) {
  switch (kind) {
    case PolicyKind::CCConUCB:
      return mu0_known ? "ccconucb_known" : "ccconucb_unknown";
    case PolicyKind::C2UCB:
      return "c2ucb";
    case PolicyKind::AlwaysConservative:
      return "always_conservative";
  }
  return "unknown";
}

int auto_cadence(int T, int requested) {
  if (requested > 0) return requested;
  return T > 10000 ? 50 : 1;
}

// Sum over stored plays of ||x||^2 under the current V^{-1}.
double history_norm_sum(const RidgeState& state, const History& history) {
  if (history.stored_arms() == 0) return 0.0;
  const auto X = history.feature_block();
  const Mat A = state.Vinv * X;
  return std::max(0.0, X.cwiseProduct(A).sum());
}

bool coverage_violated(const RidgeState& state, const Mat& X, const Vec& truth) {
  if (X.cols() == 0) return false;
  const BatchBounds bb = batch_bounds(state, X);
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (truth[i] < bb.lower[i] || truth[i] > bb.upper[i]) return true;
  }
  return false;
}

}  // namespace

bool same_shape(const EpisodeMeta& a, const EpisodeMeta& b) {
  return a.policy == b.policy && a.kind == b.kind && a.mu0_known == b.mu0_known &&
         a.alpha == b.alpha && a.T == b.T &&
         a.ridge.lambda == b.ridge.lambda && a.ridge.delta == b.ridge.delta &&
         a.ridge.refresh_every == b.ridge.refresh_every &&
         a.recompute_mode == b.recompute_mode && a.gen.M == b.gen.M &&
         a.gen.d == b.gen.d && a.gen.K == b.gen.K && a.gen.S == b.gen.S &&
         a.gen.L == b.gen.L &&
         a.gen.conservative_set_size == b.gen.conservative_set_size &&
         a.gen.noise.kind == b.gen.noise.kind &&
         a.gen.noise.param == b.gen.noise.param &&
         a.gen.feature_law == b.gen.feature_law &&
         a.gen.reward.id == b.gen.reward.id &&
         a.gen.reward.scale == b.gen.reward.scale;
}

EpisodeResult run_episode(const EnvironmentInstance& inst, PolicyKind kind,
                          const PolicyConfig& cfg, const RidgeParams& ridge,
                          int T, std::uint64_t episode_seed,
                          const ProbeOptions& probes) {
  if (T < 1) throw std::invalid_argument("run_episode: T must be >= 1");
  if (cfg.K != inst.cfg.K) {
    throw std::invalid_argument("run_episode: policy K != instance K");
  }

  EpisodeResult result;
  RunLog& log = result.log;
  StateTrace& trace = result.trace;

  log.meta.policy = policy_label(kind, cfg.mu0.has_value());
  log.meta.kind = kind;
  log.meta.mu0_known = cfg.mu0.has_value();
  log.meta.alpha = cfg.alpha;
  log.meta.T = T;
  log.meta.ridge = ridge;
  log.meta.recompute_mode = cfg.recompute_mode;
  log.meta.gen = inst.cfg;
  log.meta.instance_seed = inst.seed;
  log.meta.episode_seed = episode_seed;
  log.meta.mu0_true = inst.mu0_true;
  log.records.reserve(T);

  trace.kind = kind;
  trace.mu0_known = cfg.mu0.has_value();
  trace.cadence = auto_cadence(T, probes.cadence);
  trace.coverage_enabled = probes.enabled && probes.coverage;
  if (probes.enabled) trace.rows.reserve(T);

  RidgeState state =
      init_state(inst.cfg.d, ridge.lambda, inst.cfg.S, ridge.delta,
                 ridge.refresh_every);
  History history;

  const Vec cons_truth =
      inst.conservative_features.transpose() * inst.theta_star;
  bool a0_played = false;
  double min_gap = std::numeric_limits<double>::infinity();
  double cached_norm_sum = 0.0;
  bool norm_sum_dirty = false;  // fresh state + empty history => sum is 0

  for (int t = 1; t <= T; ++t) {
    const RoundContext ctx = sample_round_context(inst, t, episode_seed);
    const Decision dec = step(kind, state, history, ctx, cfg);
    if (!std::isfinite(dec.psi) || !std::isfinite(dec.threshold)) {
      throw std::runtime_error("run_episode: non-finite constraint bound at round " +
                               std::to_string(t));
    }

    const OracleQuantities oracle = oracle_quantities(inst, ctx, cfg.reward);
    min_gap = std::min(min_gap, oracle.gap_to_mu0);

    const Vec w_expected = expected_weights(inst, ctx, dec.action);
    const Vec w_realized = realize_weights(inst, ctx, dec.action, episode_seed);

    const bool ingest_now =
        kind == PolicyKind::C2UCB ||
        (kind == PolicyKind::CCConUCB && !dec.was_conservative);

    double baseline_for_probe = std::numeric_limits<double>::quiet_NaN();
    if (probes.enabled && dec.was_conservative && kind == PolicyKind::CCConUCB) {
      baseline_for_probe = cfg.mu0.has_value()
                               ? *cfg.mu0
                               : conservative_upper_reward(state, ctx, cfg);
      if (!cfg.mu0.has_value() &&
          history.conservative_count() >= (1.0 - cfg.alpha) * t) {
        ++trace.unknown_precondition_rounds;
      }
    }

    if (ingest_now) {
      const double static_lower =
          action_lower_reward(state, ctx, dec.action, cfg);
      Mat played;
      if (dec.action.is_conservative()) {
        played = inst.conservative_features;
        a0_played = true;
      } else {
        played = Mat(inst.cfg.d, dec.action.arms.size());
        for (std::size_t i = 0; i < dec.action.arms.size(); ++i) {
          played.col(i) = ctx.base_features.col(dec.action.arms[i]);
        }
      }
      for (Eigen::Index i = 0; i < played.cols(); ++i) {
        ingest_observation(state, played.col(i), w_realized[i]);
      }
      history.append_optimistic(t, dec.action, played, static_lower);
      norm_sum_dirty = true;
    } else {
      history.note_conservative();
      if (dec.action.is_conservative()) a0_played = true;
    }

    RoundRecord rec;
    rec.t = t;
    rec.action = dec.action;
    rec.was_conservative = dec.was_conservative;
    rec.weights.assign(w_realized.data(), w_realized.data() + w_realized.size());
    rec.expected_reward = evaluate(cfg.reward, w_expected);
    rec.optimal_reward = oracle.best_value;
    rec.psi = dec.psi;
    rec.threshold = dec.threshold;
    log.records.push_back(std::move(rec));

    if (probes.enabled) {
      TraceRow row;
      row.t = t;
      row.n_t = history.optimistic_count();
      row.d_t = history.conservative_count();
      row.log_det_V = state.log_det_V;
      row.conservative = dec.was_conservative;
      row.baseline = baseline_for_probe;
      const bool cadence_hit = (t % trace.cadence) == 0;
      const bool need_norm_sum =
          cadence_hit || (dec.was_conservative && kind == PolicyKind::CCConUCB);
      if (need_norm_sum) {
        if (norm_sum_dirty) {
          cached_norm_sum = history_norm_sum(state, history);
          norm_sum_dirty = false;
        }
        row.norm_sum = cached_norm_sum;
      }
      if (trace.coverage_enabled && cadence_hit) {
        row.coverage_checked = true;
        bool violated = false;
        if (history.stored_arms() > 0) {
          const Vec truth =
              history.feature_block().transpose() * inst.theta_star;
          violated = coverage_violated(state, history.feature_block(), truth);
        }
        if (!violated && a0_played) {
          violated = coverage_violated(state, inst.conservative_features,
                                       cons_truth);
        }
        row.coverage_violation = violated;
      }
      trace.rows.push_back(row);
    }
  }

  trace.min_gap = min_gap;
  return result;
}

std::vector<double> pseudo_regret(const RunLog& log) {
  std::vector<double> r;
  r.reserve(log.records.size());
  double cum = 0.0;
  for (const auto& rec : log.records) {
    cum += rec.optimal_reward - rec.expected_reward;
    r.push_back(cum);
  }
  return r;
}

long constraint_violations(const RunLog& log, double alpha, double mu0_true) {
  long count = 0;
  double cum = 0.0;
  for (const auto& rec : log.records) {
    cum += rec.expected_reward;
    if (cum < (1.0 - alpha) * rec.t * mu0_true) ++count;
  }
  return count;
}

long constraint_violations_realized(const RunLog& log, double alpha,
                                    double mu0_true) {
  long count = 0;
  double cum = 0.0;
  for (const auto& rec : log.records) {
    const Vec wv = Eigen::Map<const Vec>(
        rec.weights.data(), static_cast<Eigen::Index>(rec.weights.size()));
    cum += evaluate(log.meta.gen.reward, wv);
    if (cum < (1.0 - alpha) * rec.t * mu0_true) ++count;
  }
  return count;
}

std::pair<long, long> selection_counts(const RunLog& log) {
  long n = 0, d = 0;
  for (const auto& rec : log.records) {
    rec.was_conservative ? ++d : ++n;
  }
  return {n, d};
}

std::optional<int> endurance_time(const RunLog& ccc_log, const RunLog& cons_log) {
  if (ccc_log.records.size() != cons_log.records.size()) {
    throw std::invalid_argument("endurance_time: horizon mismatch");
  }
  double cum_ccc = 0.0, cum_cons = 0.0;
  for (std::size_t i = 0; i < ccc_log.records.size(); ++i) {
    cum_ccc += ccc_log.records[i].expected_reward;
    cum_cons += cons_log.records[i].expected_reward;
    if (cum_ccc > cum_cons) return ccc_log.records[i].t;
  }
  return std::nullopt;
}

ProbeParams probe_params_from_meta(const EpisodeMeta& meta) {
  ProbeParams p;
  p.d = meta.gen.d;
  p.K = meta.gen.K;
  p.L = meta.gen.L;
  p.lambda = meta.ridge.lambda;
  p.S = meta.gen.S;
  p.delta = meta.ridge.delta;
  p.alpha = meta.alpha;
  p.mu0 = meta.mu0_true;
  p.P = lipschitz_constant(meta.gen.reward, meta.gen.K);
  return p;
}

double closed_form_radius(const ProbeParams& p, long t) {
  const double body = 2.0 * std::log(1.0 / p.delta) +
                      p.d * std::log1p(p.K * p.L * static_cast<double>(t) /
                                       (p.lambda * p.d));
  return std::sqrt(p.lambda) * p.S + std::sqrt(std::max(0.0, body));
}

ProbeReport probe_lemma2(const StateTrace& trace, const ProbeParams& p) {
  ProbeReport r;
  r.name = "lemma2_det_bound";
  for (const auto& row : trace.rows) {
    const double rhs =
        p.d * std::log(p.lambda + static_cast<double>(row.n_t) * p.K * p.L / p.d);
    r.max_violation = std::max(r.max_violation, row.log_det_V - rhs);
    ++r.rounds_checked;
  }
  r.pass = r.rounds_checked == 0 || r.max_violation <= kProbeTolerance;
  return r;
}

ProbeReport probe_norm_sums(const StateTrace& trace, const ProbeParams& p) {
  ProbeReport r;
  r.name = "lemma45_norm_sum_bounds";
  long rule_agree = 0;
  for (const auto& row : trace.rows) {
    if (!std::isfinite(row.norm_sum)) continue;
    const double nk = static_cast<double>(row.n_t) * p.K;
    double l4 = 0.0, l5 = 0.0;
    if (row.n_t > 0) {
      l4 = nk * (1.0 - std::pow(p.lambda / (p.lambda + nk * p.L / p.d), p.d / nk));
      l5 = nk * p.L * p.d / (p.lambda * p.d + nk * p.L);
    }
    r.max_violation = std::max(r.max_violation, row.norm_sum - std::min(l4, l5));
    if (row.n_t > 0 && ((nk <= p.d) == (l4 <= l5))) ++rule_agree;
    ++r.rounds_checked;
  }
  r.pass = r.rounds_checked == 0 || r.max_violation <= kProbeTolerance;
  std::ostringstream note;
  note << "tighter-bound rule of thumb agreed on " << rule_agree << "/"
       << r.rounds_checked << " checked rounds; cadence=" << trace.cadence;
  r.note = note.str();
  return r;
}

ProbeReport probe_lemma6(const StateTrace& trace, const ProbeParams& p) {
  ProbeReport r;
  r.name = "lemma6_conservative_rounds";
  if (trace.kind != PolicyKind::CCConUCB) {
    r.note = "not applicable to this policy";
    return r;
  }
  const double dmin = trace.min_gap;
  for (const auto& row : trace.rows) {
    if (!row.conservative) continue;
    if (!std::isfinite(row.norm_sum) || !std::isfinite(row.baseline)) continue;
    const double b = row.baseline;
    if (!(b > 0.0)) continue;  // bound is vacuous at a nonpositive baseline
    const double n = static_cast<double>(row.n_t);
    const double c_prev = closed_form_radius(p, row.t - 1);
    const double rhs = ((1.0 - (1.0 + n) * p.alpha) * b - n * dmin +
                        2.0 * p.P * c_prev * std::sqrt(n * row.norm_sum)) /
                       (p.alpha * b);
    const double lhs = static_cast<double>(row.d_t) - 1.0;
    r.max_violation = std::max(r.max_violation, lhs - rhs);
    ++r.rounds_checked;
  }
  r.pass = r.rounds_checked == 0 || r.max_violation < kProbeTolerance;
  if (!trace.mu0_known) {
    std::ostringstream note;
    note << "baseline f(A0,U_t0); rounds with d_{t-1} >= (1-alpha)t: "
         << trace.unknown_precondition_rounds;
    r.note = note.str();
  }
  return r;
}

ProbeReport probe_confidence_coverage(const std::vector<StateTrace>& traces,
                                      double delta) {
  if (traces.size() < 100) {
    throw std::invalid_argument(
        "probe_confidence_coverage: needs at least 100 episodes");
  }
  ProbeReport r;
  r.name = "lemma1_coverage";
  long failures = 0;
  for (const auto& trace : traces) {
    bool violated = false;
    for (const auto& row : trace.rows) {
      if (row.coverage_checked && row.coverage_violation) {
        violated = true;
        break;
      }
    }
    if (violated) ++failures;
  }
  const double R = static_cast<double>(traces.size());
  const double fraction = static_cast<double>(failures) / R;
  const double allowed = delta + 2.0 * std::sqrt(delta * (1.0 - delta) / R);
  r.rounds_checked = static_cast<long>(traces.size());
  r.max_violation = fraction - allowed;
  r.pass = fraction <= allowed;
  std::ostringstream note;
  note << failures << "/" << traces.size() << " episodes with any containment "
       << "failure (allowed fraction " << allowed << ")";
  r.note = note.str();
  return r;
}

std::vector<AggregateRow> aggregate(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("aggregate: no logs");
  for (const auto& log : logs) {
    if (!same_shape(log.meta, logs.front().meta)) {
      throw std::invalid_argument("aggregate: heterogeneous configs");
    }
  }
  const int T = logs.front().meta.T;
  const int n = static_cast<int>(logs.size());
  std::vector<std::vector<double>> avg(n);
  for (int i = 0; i < n; ++i) {
    const auto regret = pseudo_regret(logs[i]);
    avg[i].resize(T);
    for (int t = 0; t < T; ++t) avg[i][t] = regret[t] / (t + 1);
  }
  std::vector<AggregateRow> rows(T);
  for (int t = 0; t < T; ++t) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += avg[i][t];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      var += (avg[i][t] - mean) * (avg[i][t] - mean);
    }
    var = n > 1 ? var / (n - 1) : 0.0;
    rows[t] = AggregateRow{t + 1, mean, std::sqrt(var), logs.front().meta.policy};
  }
  return rows;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

nlohmann::json meta_to_json(const EpisodeMeta& m) {
  nlohmann::json j;
  j["policy"] = m.policy;
  j["alpha"] = m.alpha;
  j["T"] = m.T;
  j["M"] = m.gen.M;
  j["d"] = m.gen.d;
  j["K"] = m.gen.K;
  j["S"] = m.gen.S;
  j["L"] = m.gen.L;
  j["lambda"] = m.ridge.lambda;
  j["delta"] = m.ridge.delta;
  j["refresh_every"] = m.ridge.refresh_every;
  j["recompute_mode"] =
      m.recompute_mode == RecomputeMode::Fresh ? "fresh" : "static";
  j["mu0_known"] = m.mu0_known;
  j["mu0_true"] = m.mu0_true;
  j["conservative_set_size"] = m.gen.conservative_set_size;
  j["noise"] = {{"kind", m.gen.noise.kind == NoiseKind::Gaussian ? "gaussian"
                                                                 : "uniform"},
                {"param", m.gen.noise.param}};
  j["reward_function"] = {
      {"id", m.gen.reward.id == RewardId::LinearSum ? "linear_sum"
                                                    : "saturating_concave"},
      {"scale", m.gen.reward.scale}};
  j["instance_seed"] = m.instance_seed;
  j["episode_seed"] = m.episode_seed;
  return j;
}

}  // namespace

void write_runlog_ndjson(std::ostream& os, const RunLog& log) {
  nlohmann::json header;
  header["meta"] = meta_to_json(log.meta);
  os << header.dump() << "\n";
  for (const auto& rec : log.records) {
    nlohmann::json j;
    j["t"] = rec.t;
    j["kind"] = rec.action.is_conservative() ? "conservative" : "base";
    j["arms"] = rec.action.arms;
    j["was_conservative"] = rec.was_conservative;
    j["weights"] = rec.weights;
    j["expected_reward"] = rec.expected_reward;
    j["optimal_reward"] = rec.optimal_reward;
    j["psi"] = rec.psi;
    j["threshold"] = rec.threshold;
    os << j.dump() << "\n";
  }
}

std::string runlog_to_ndjson(const RunLog& log) {
  std::ostringstream os;
  write_runlog_ndjson(os, log);
  return os.str();
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << "t,mean_avg_regret,std_avg_regret,policy\n";
  for (const auto& row : rows) {
    os << row.t << "," << fmt_double(row.mean_avg_regret) << ","
       << fmt_double(row.std_avg_regret) << "," << row.policy << "\n";
  }
}

nlohmann::json probe_report_to_json(const ProbeReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["rounds_checked"] = r.rounds_checked;
  j["max_violation"] = std::isfinite(r.max_violation) ? r.max_violation : 0.0;
  j["pass"] = r.pass;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int w = workers > 0 ? workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (w <= 0) w = 1;
  w = std::min(w, n);
  if (w == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (int k = 0; k < w; ++k) {
    threads.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ccb
