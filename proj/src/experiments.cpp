#include "ccb/experiments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

namespace ccb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_alpha(double a) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", a);
  return buf;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return buf;
}

PolicyKind kind_of(const std::string& policy) {
  if (policy == "c2ucb") return PolicyKind::C2UCB;
  if (policy == "always_conservative") return PolicyKind::AlwaysConservative;
  return PolicyKind::CCConUCB;
}

struct ProbeRollup {
  std::map<std::string, ProbeReport> by_name;
  void add(const ProbeReport& r) {
    auto [it, inserted] = by_name.emplace(r.name, r);
    if (!inserted) {
      it->second.rounds_checked += r.rounds_checked;
      it->second.max_violation = std::max(it->second.max_violation, r.max_violation);
      it->second.pass = it->second.pass && r.pass;
      if (!r.pass && !r.note.empty()) it->second.note = r.note;
    }
  }
  bool all_pass() const {
    return std::all_of(by_name.begin(), by_name.end(),
                       [](const auto& kv) { return kv.second.pass; });
  }
  json to_json() const {
    json arr = json::array();
    for (const auto& [name, report] : by_name) arr.push_back(probe_report_to_json(report));
    return arr;
  }
};

void collect_probes(ProbeRollup& rollup, const EpisodeResult& result) {
  const ProbeParams p = probe_params_from_meta(result.log.meta);
  rollup.add(probe_lemma2(result.trace, p));
  rollup.add(probe_norm_sums(result.trace, p));
  if (result.trace.kind == PolicyKind::CCConUCB) {
    rollup.add(probe_lemma6(result.trace, p));
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << contents;
}

struct ExperimentContext {
  const ExperimentConfig& cfg;
  RunOptions opt;
  fs::path out_dir;
  fs::path runs_dir;
  int workers = 1;
  ProbeRollup probes;
  std::mutex mu;  // guards probes + file writes from worker threads
  json runs_manifest = json::array();

  void record_run(const EpisodeResult& result, const std::string& filename) {
    std::lock_guard<std::mutex> lock(mu);
    collect_probes(probes, result);
    json entry;
    entry["file"] = filename;
    entry["policy"] = result.log.meta.policy;
    entry["alpha"] = result.log.meta.alpha;
    entry["instance_seed"] = result.log.meta.instance_seed;
    runs_manifest.push_back(entry);
  }
};

void dump_run(ExperimentContext& ctx, const EpisodeResult& result,
              const std::string& stem) {
  const std::string filename = "runs/" + stem + ".ndjson";
  write_file(ctx.out_dir / filename, runlog_to_ndjson(result.log));
  ctx.record_run(result, filename);
}

// ---- experiments -----------------------------------------------------------

void run_regret_curves(ExperimentContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  for (double alpha : cfg.alpha_grid) {
    std::vector<std::vector<RunLog>> by_policy(cfg.policies.size());
    for (auto& v : by_policy) v.resize(cfg.n_seeds);

    const int total = static_cast<int>(cfg.policies.size()) * cfg.n_seeds;
    parallel_for(total, ctx.workers, [&](int task) {
      const int pi = task / cfg.n_seeds;
      const int si = task % cfg.n_seeds;
      const std::uint64_t seed = ctx.opt.seed_offset + si;
      const EnvironmentInstance inst = generate_instance(gen_config_of(cfg), seed);
      EpisodeResult result =
          run_policy_episode(cfg, inst, cfg.policies[pi], alpha, ProbeOptions{});
      std::ostringstream stem;
      stem << cfg.policies[pi] << "_alpha" << fmt_alpha(alpha) << "_seed" << seed;
      dump_run(ctx, result, stem.str());
      by_policy[pi][si] = std::move(result.log);
    });

    std::vector<AggregateRow> rows;
    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
      auto part = aggregate(by_policy[pi]);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    std::ostringstream os;
    write_aggregate_csv(os, rows);
    write_file(ctx.out_dir / ("regret_alpha" + fmt_alpha(alpha) + ".csv"), os.str());
  }
}

void run_table1(ExperimentContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const bool realized = cfg.realized_violation_counter;
  std::ostringstream csv;
  csv << "alpha,c2ucb_mean_violations,c2ucb_mean_satisfied,"
         "ccconucb_mean_optimistic,ccconucb_mean_conservative\n";
  for (double alpha : cfg.alpha_grid) {
    std::vector<long> c2_violations(cfg.n_seeds, 0);
    std::vector<long> ccc_n(cfg.n_seeds, 0), ccc_d(cfg.n_seeds, 0);
    parallel_for(cfg.n_seeds * 2, ctx.workers, [&](int task) {
      const int si = task % cfg.n_seeds;
      const bool is_c2 = task < cfg.n_seeds;
      const std::uint64_t seed = ctx.opt.seed_offset + si;
      const EnvironmentInstance inst = generate_instance(gen_config_of(cfg), seed);
      const std::string policy = is_c2 ? "c2ucb" : "ccconucb_known";
      EpisodeResult result =
          run_policy_episode(cfg, inst, policy, alpha, ProbeOptions{});
      if (is_c2) {
        c2_violations[si] =
            realized ? constraint_violations_realized(result.log, alpha, inst.mu0_true)
                     : constraint_violations(result.log, alpha, inst.mu0_true);
      } else {
        const auto [n, d] = selection_counts(result.log);
        ccc_n[si] = n;
        ccc_d[si] = d;
      }
      std::ostringstream stem;
      stem << policy << "_alpha" << fmt_alpha(alpha) << "_seed" << seed;
      dump_run(ctx, result, stem.str());
    });
    const auto mean = [&](const std::vector<long>& v) {
      double s = 0.0;
      for (long x : v) s += static_cast<double>(x);
      return s / v.size();
    };
    const double mv = mean(c2_violations);
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%.12g,%.12g,%.12g,%.12g\n",
                  fmt_alpha(alpha).c_str(), mv, cfg.T - mv, mean(ccc_n),
                  mean(ccc_d));
    csv << line;
  }
  write_file(ctx.out_dir / "table1.csv", csv.str());
}

void run_endurance(ExperimentContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  struct Row {
    std::uint64_t seed;
    double alpha;
    double gap;
    std::optional<int> endurance;
  };
  const int n_alpha = static_cast<int>(cfg.alpha_grid.size());
  std::vector<Row> rows(cfg.n_seeds * n_alpha);
  parallel_for(cfg.n_seeds, ctx.workers, [&](int si) {
    const std::uint64_t seed = ctx.opt.seed_offset + si;
    const EnvironmentInstance inst = generate_instance(gen_config_of(cfg), seed);
    EpisodeResult cons = run_policy_episode(cfg, inst, "always_conservative",
                                            cfg.alpha_grid.front(), ProbeOptions{});
    {
      std::ostringstream stem;
      stem << "always_conservative_seed" << seed;
      dump_run(ctx, cons, stem.str());
    }
    for (int ai = 0; ai < n_alpha; ++ai) {
      const double alpha = cfg.alpha_grid[ai];
      EpisodeResult ccc =
          run_policy_episode(cfg, inst, "ccconucb_known", alpha, ProbeOptions{});
      double gap_sum = 0.0;
      for (const auto& rec : ccc.log.records) {
        gap_sum += rec.optimal_reward - inst.mu0_true;
      }
      Row row;
      row.seed = seed;
      row.alpha = alpha;
      row.gap = gap_sum / cfg.T;
      row.endurance = endurance_time(ccc.log, cons.log);
      rows[si * n_alpha + ai] = row;
      std::ostringstream stem;
      stem << "ccconucb_known_alpha" << fmt_alpha(alpha) << "_seed" << seed;
      dump_run(ctx, ccc, stem.str());
    }
  });
  std::ostringstream csv;
  csv << "instance_seed,alpha,gap,endurance_time\n";
  for (const auto& row : rows) {
    csv << row.seed << "," << fmt_alpha(row.alpha) << ",";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", row.gap);
    csv << buf << ",";
    if (row.endurance) csv << *row.endurance;
    csv << "\n";
  }
  write_file(ctx.out_dir / "endurance.csv", csv.str());
}

void run_probes_experiment(ExperimentContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  std::vector<StateTrace> traces(cfg.policies.size() * cfg.n_seeds);
  const int total = static_cast<int>(traces.size());
  ProbeOptions popt;
  popt.coverage = true;
  parallel_for(total, ctx.workers, [&](int task) {
    const int pi = task / cfg.n_seeds;
    const int si = task % cfg.n_seeds;
    const std::uint64_t seed = ctx.opt.seed_offset + si;
    const EnvironmentInstance inst = generate_instance(gen_config_of(cfg), seed);
    EpisodeResult result = run_policy_episode(cfg, inst, cfg.policies[pi],
                                              cfg.alpha_grid.front(), popt);
    std::ostringstream stem;
    stem << cfg.policies[pi] << "_alpha" << fmt_alpha(cfg.alpha_grid.front())
         << "_seed" << seed;
    dump_run(ctx, result, stem.str());
    traces[task] = std::move(result.trace);
  });
  if (traces.size() >= 100) {
    std::lock_guard<std::mutex> lock(ctx.mu);
    ctx.probes.add(probe_confidence_coverage(traces, cfg.delta));
  } else {
    ProbeReport skipped;
    skipped.name = "lemma1_coverage";
    skipped.note = "skipped: needs >= 100 episodes, got " +
                   std::to_string(traces.size());
    std::lock_guard<std::mutex> lock(ctx.mu);
    ctx.probes.add(skipped);
  }
}

}  // namespace

EpisodeResult run_policy_episode(const ExperimentConfig& cfg,
                                 const EnvironmentInstance& inst,
                                 const std::string& policy, double alpha,
                                 const ProbeOptions& probes) {
  PolicyConfig pc;
  pc.alpha = alpha;
  pc.K = cfg.K;
  pc.reward = cfg.reward;
  pc.recompute_mode = cfg.recompute_mode;
  if (policy != "ccconucb_unknown") pc.mu0 = inst.mu0_true;
  RidgeParams ridge{cfg.lambda, cfg.delta, cfg.refresh_every};
  return run_episode(inst, kind_of(policy), pc, ridge, cfg.T, inst.seed, probes);
}

int cmd_run(const ExperimentConfig& cfg, const RunOptions& opt) {
  ExperimentContext ctx{cfg, opt};
  ctx.out_dir = opt.output_override.empty() ? fs::path(cfg.output_dir)
                                            : fs::path(opt.output_override);
  ctx.runs_dir = ctx.out_dir / "runs";
  fs::create_directories(ctx.runs_dir);
  ctx.workers = opt.workers > 0 ? opt.workers : cfg.workers;

  if (const auto warning = lambda_below_l_warning(cfg.lambda, cfg.L)) {
    std::cerr << "[warn] " << *warning << "\n";
  }

  bool aborted = false;
  std::string abort_reason;
  try {
    switch (cfg.experiment) {
      case ExperimentKind::RegretCurves:
        run_regret_curves(ctx);
        break;
      case ExperimentKind::Table1:
        run_table1(ctx);
        break;
      case ExperimentKind::Endurance:
        run_endurance(ctx);
        break;
      case ExperimentKind::Probes:
        run_probes_experiment(ctx);
        break;
    }
  } catch (const std::exception& e) {
    aborted = true;
    abort_reason = e.what();
  }

  // Worker completion order is nondeterministic; keep the manifest stable.
  std::sort(ctx.runs_manifest.begin(), ctx.runs_manifest.end(),
            [](const json& a, const json& b) {
              return a.at("file").get<std::string>() <
                     b.at("file").get<std::string>();
            });

  json probes_json;
  probes_json["reports"] = ctx.probes.to_json();
  probes_json["all_pass"] = ctx.probes.all_pass();
  write_file(ctx.out_dir / "probes_report.json", probes_json.dump(2) + "\n");

  json manifest;
  manifest["tool"] = "ccb_sim";
  manifest["version"] = kToolVersion;
  manifest["timestamp"] = iso_timestamp();
  manifest["config"] = config_to_json(cfg);
  manifest["seed_offset"] = opt.seed_offset;
  manifest["workers"] = ctx.workers;
  manifest["seeds"] = [&] {
    json seeds = json::array();
    for (int i = 0; i < cfg.n_seeds; ++i) seeds.push_back(opt.seed_offset + i);
    return seeds;
  }();
  manifest["runs"] = ctx.runs_manifest;
  if (aborted) manifest["aborted"] = abort_reason;
  write_file(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");

  if (aborted) {
    std::cerr << "[abort] " << abort_reason << "\n";
    return 3;
  }
  if (!ctx.probes.all_pass()) {
    std::cerr << "[fail] analytic probes reported violations; see "
              << (ctx.out_dir / "probes_report.json") << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ccb
