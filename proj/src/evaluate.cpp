#include "mfp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "mfp/error.hpp"
#include "mfp/log.hpp"
#include "mfp/parallel.hpp"
#include "mfp/random.hpp"
#include "mfp/roc.hpp"
#include "mfp/version.hpp"

namespace mfp {

using nlohmann::json;

namespace {

const LabeledDataset& split_of(const VictimEntry& v, Split split) {
  return split == Split::Train ? v.train : v.test;
}

std::vector<std::string> task_order(const BenchmarkTriplet& b) {
  std::vector<std::string> out;
  for (const auto& s : b.config.stolen) {
    if (std::find(out.begin(), out.end(), s.tag.name()) == out.end()) out.push_back(s.tag.name());
  }
  for (const auto& v : b.victims) {
    for (const auto& m : v.stolen) {
      if (std::find(out.begin(), out.end(), m->tag().name()) == out.end()) out.push_back(m->tag().name());
    }
  }
  return out;
}

TaskSummary summarize(std::string name, std::vector<double> runs) {
  TaskSummary t;
  t.task = std::move(name);
  t.runs = std::move(runs);
  if (!t.runs.empty()) {
    t.mean = std::accumulate(t.runs.begin(), t.runs.end(), 0.0) / static_cast<double>(t.runs.size());
    t.std = sample_std(t.runs);
  }
  return t;
}

struct VictimRun {
  bool skipped = false;
  std::string reason;
  std::vector<PairScore> pairs;  // stolen first, then unrelated, in benchmark order
};

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "undefined"; }

json summary_entry(const TaskSummary& t) {
  return {{"task", t.task}, {"runs", t.runs}, {"mean", t.mean}, {"std", t.std}};
}

std::vector<PairStatRecord> compute_pair_stats(const BenchmarkTriplet& b, Split split, std::size_t workers) {
  std::vector<std::vector<PairStatRecord>> per_victim(b.victims.size());
  parallel_for(b.victims.size(), workers, [&](std::size_t vi) {
    const auto& v = b.victims[vi];
    const auto& data = split_of(v, split);
    const auto h = predict_labels(*v.model, data.points);
    for (const auto* group : {&v.stolen, &v.unrelated}) {
      for (const auto& m : *group) {
        per_victim[vi].push_back({v.model->id(), m->id(), m->tag().name(), m->tag().positive(),
                                  pair_stats_from_labels(h, predict_labels(*m, data.points), data.labels)});
      }
    }
  });
  std::vector<PairStatRecord> out;
  for (auto& p : per_victim) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

const TaskSummary* EvalReport::task(const std::string& name) const {
  for (const auto& t : tasks) {
    if (t.task == name) return &t;
  }
  return nullptr;
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

EvalReport evaluate(const SchemeSpec& scheme_in, const BenchmarkTriplet& b, std::size_t budget, std::size_t n_runs,
                    std::uint64_t seed, const EvalOptions& options) {
  if (n_runs == 0) throw Error("bad-runs", "n_runs must be positive");
  SchemeSpec spec = scheme_in;
  spec.budget = budget;
  const FingerprintingScheme scheme = assemble_scheme(spec);

  EvalReport report;
  report.scheme = spec.name.empty() ? spec.describe() : spec.name;
  report.scheme_spec = to_json(spec);
  report.budget = budget;
  report.n_runs = n_runs;
  report.root_seed = seed;
  for (std::size_t r = 0; r < n_runs; ++r) report.run_seeds.push_back(seed + r);

  const std::size_t nv = b.victims.size();
  std::vector<VictimRun> results(n_runs * nv);
  parallel_for(results.size(), options.workers, [&](std::size_t job) {
    const std::size_t r = job / nv, vi = job % nv;
    const auto& v = b.victims[vi];
    auto& out = results[job];
    VictimContext ctx;
    try {
      ctx = scheme.prepare(*v.model, split_of(v, spec.seed_split), v.calibration,
                           derive_seed(report.run_seeds[r], {vi}));
    } catch (const Error& e) {
      out.skipped = true;
      out.reason = e.what();
      return;
    }
    for (const auto* group : {&v.stolen, &v.unrelated}) {
      for (const auto& m : *group) {
        PairScore p{r, v.model->id(), m->id(), m->tag().name(), m->tag().positive(), 0.0, 0.0, std::nullopt};
        try {
          const SchemeScore s = scheme.score(ctx, *m);
          p.distance = s.distance;
          p.score = s.score;
          p.flag = s.flag;
        } catch (const Error& e) {
          // A suspect that cannot answer the scheme's queries is never flagged.
          log_warn("run " + std::to_string(r) + ": " + m->id() + " unscorable: " + e.what());
          p.distance = p.score = std::numeric_limits<double>::infinity();
          p.flag = false;
        }
        out.pairs.push_back(std::move(p));
      }
    }
  });

  const auto tasks = task_order(b);
  std::vector<std::vector<double>> task_runs(tasks.size());
  std::vector<double> agg_pairs, agg_tasks;
  for (std::size_t r = 0; r < n_runs; ++r) {
    std::vector<const VictimRun*> kept;
    for (std::size_t vi = 0; vi < nv; ++vi) {
      const auto& vr = results[r * nv + vi];
      if (vr.skipped) {
        const auto msg = "run " + std::to_string(r) + " victim " + b.victims[vi].model->id() + ": " + vr.reason;
        log_warn("skipped " + msg);
        report.skipped.push_back(msg);
      } else {
        kept.push_back(&vr);
        report.pairs.insert(report.pairs.end(), vr.pairs.begin(), vr.pairs.end());
      }
    }
    if (kept.empty()) {
      report.feasible = false;
      continue;
    }
    auto scores_for = [&](const std::string* task) {
      std::vector<VictimScores> scores;
      for (const auto* vr : kept) {
        VictimScores s;
        for (const auto& p : vr->pairs) {
          if (!p.positive) {
            s.negative.push_back(-p.score);
          } else if (task == nullptr || p.task == *task) {
            s.positive.push_back(-p.score);
          }
        }
        if (!s.positive.empty()) scores.push_back(std::move(s));
      }
      return scores;
    };
    double task_sum = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto scores = scores_for(&tasks[t]);
      const double tpr = scores.empty() ? 0.0 : tpr_at_fpr(roc_curve(scores), report.fpr_cap);
      task_runs[t].push_back(tpr);
      task_sum += tpr;
    }
    agg_tasks.push_back(tasks.empty() ? 0.0 : task_sum / static_cast<double>(tasks.size()));
    agg_pairs.push_back(tpr_at_fpr(roc_curve(scores_for(nullptr)), report.fpr_cap));
  }
  if (report.feasible) {
    for (std::size_t t = 0; t < tasks.size(); ++t) report.tasks.push_back(summarize(tasks[t], task_runs[t]));
    report.aggregate_pairs = summarize("aggregate_pairs", agg_pairs);
    report.aggregate_tasks = summarize("aggregate_tasks", agg_tasks);
  }

  if (options.pair_stats) report.pair_stats = compute_pair_stats(b, Split::Test, options.workers);
  if (const auto* mlp = dynamic_cast<const MlpClassifier*>(b.victims.front().model.get())) {
    report.scale.victim_parameters = mlp->model().parameter_count();
    report.scale.victim_widths = mlp->model().widths();
  }
  report.scale.victims = nv;
  report.scale.models = b.model_count();
  report.scale.eval_points = split_of(b.victims.front(), spec.seed_split).size();
  return report;
}

std::vector<EvalReport> budget_sweep(const SchemeSpec& scheme, const BenchmarkTriplet& b,
                                     const std::vector<std::size_t>& budgets, std::size_t n_runs, std::uint64_t seed,
                                     const EvalOptions& options) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) throw Error("bad-budgets", "budgets must be ascending");
  std::vector<EvalReport> out;
  for (std::size_t budget : budgets) {
    EvalOptions o = options;
    o.pair_stats = options.pair_stats && out.empty();
    out.push_back(evaluate(scheme, b, budget, n_runs, seed, o));
    if (!out.back().feasible) log_warn("budget " + std::to_string(budget) + " infeasible for " + scheme.name);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("empty-evaluation-set", "percentile of no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DistanceReport pair_distance_report(const BenchmarkTriplet& b, Split split, std::size_t workers) {
  DistanceReport report;
  report.pairs = compute_pair_stats(b, split, workers);
  std::vector<double> pos, neg;
  for (const auto& p : report.pairs) {
    auto it = std::find_if(report.groups.begin(), report.groups.end(),
                           [&](const DistanceGroup& g) { return g.task == p.task; });
    if (it == report.groups.end()) {
      report.groups.push_back({p.task, p.positive, {}, 0, 0.0});
      it = report.groups.end() - 1;
    }
    if (p.stats.delta_c) {
      it->delta_c.push_back(*p.stats.delta_c);
      (p.positive ? pos : neg).push_back(*p.stats.delta_c);
    } else {
      ++it->undefined;
    }
  }
  for (auto& g : report.groups) {
    if (!g.delta_c.empty()) {
      g.mean = std::accumulate(g.delta_c.begin(), g.delta_c.end(), 0.0) / static_cast<double>(g.delta_c.size());
    }
  }
  if (!neg.empty() && !pos.empty()) {
    report.negative_p5 = percentile(neg, 0.05);
    const auto above = std::count_if(pos.begin(), pos.end(), [&](double d) { return d > report.negative_p5; });
    report.overlap = static_cast<double>(above) / static_cast<double>(pos.size());
  }
  return report;
}

void write_runs_csv(const std::vector<EvalReport>& reports, std::ostream& out, bool header) {
  if (header) out << "scheme,budget,run,seed,task,tpr_at_5\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.n_runs; ++i) {
      for (const auto* t : [&] {
             std::vector<const TaskSummary*> all;
             for (const auto& t : r.tasks) all.push_back(&t);
             all.push_back(&r.aggregate_pairs);
             all.push_back(&r.aggregate_tasks);
             return all;
           }()) {
        if (i >= t->runs.size()) continue;
        out << r.scheme << ',' << r.budget << ',' << i << ',' << r.run_seeds[i] << ',' << t->task << ','
            << fmt(t->runs[i]) << '\n';
      }
    }
  }
}

void write_summary_csv(const EvalReport& r, std::ostream& out) {
  out << "scheme,budget,task,mean,std,n_runs\n";
  for (const auto& t : r.tasks) {
    out << r.scheme << ',' << r.budget << ',' << t.task << ',' << fmt(t.mean) << ',' << fmt(t.std) << ','
        << t.runs.size() << '\n';
  }
}

void write_aggregate_csv(const EvalReport& r, std::ostream& out) {
  out << "scheme,budget,aggregate,mean,std,n_runs\n";
  for (const auto* t : {&r.aggregate_pairs, &r.aggregate_tasks}) {
    out << r.scheme << ',' << r.budget << ',' << t->task << ',' << fmt(t->mean) << ',' << fmt(t->std) << ','
        << t->runs.size() << '\n';
  }
}

void write_pairs_csv(const EvalReport& r, std::ostream& out) {
  out << "run,victim,suspect,task,positive,distance,score,flag\n";
  for (const auto& p : r.pairs) {
    out << p.run << ',' << p.victim << ',' << p.suspect << ',' << p.task << ',' << (p.positive ? 1 : 0) << ','
        << fmt(p.distance) << ',' << fmt(p.score) << ',' << (p.flag ? std::to_string(*p.flag ? 1 : 0) : "")
        << '\n';
  }
}

void write_pair_stats_csv(const std::vector<PairStatRecord>& pairs, std::ostream& out) {
  out << "victim,suspect,task,positive,alpha,alpha_prime,delta,delta_c,n_eval\n";
  for (const auto& p : pairs) {
    out << p.victim << ',' << p.suspect << ',' << p.task << ',' << (p.positive ? 1 : 0) << ',' << fmt(p.stats.alpha)
        << ',' << fmt(p.stats.alpha_prime) << ',' << fmt(p.stats.delta) << ',' << fmt_opt(p.stats.delta_c) << ','
        << p.stats.n_eval << '\n';
  }
}

void write_distance_groups_csv(const DistanceReport& report, std::ostream& out) {
  out << "task,positive,count,undefined,mean_delta_c,min_delta_c,max_delta_c\n";
  for (const auto& g : report.groups) {
    const auto [lo, hi] = std::minmax_element(g.delta_c.begin(), g.delta_c.end());
    out << g.task << ',' << (g.positive ? 1 : 0) << ',' << g.delta_c.size() << ',' << g.undefined << ','
        << fmt(g.mean) << ',' << (g.delta_c.empty() ? "" : fmt(*lo)) << ','
        << (g.delta_c.empty() ? "" : fmt(*hi)) << '\n';
  }
}

json summary_json(const EvalReport& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks) tasks.push_back(summary_entry(t));
  return {{"toolkit_version", kVersion},
          {"scheme", r.scheme},
          {"scheme_spec", r.scheme_spec},
          {"budget", r.budget},
          {"n_runs", r.n_runs},
          {"root_seed", r.root_seed},
          {"run_seeds", r.run_seeds},
          {"fpr_cap", r.fpr_cap},
          {"feasible", r.feasible},
          {"tasks", tasks},
          {"aggregate_pairs", summary_entry(r.aggregate_pairs)},
          {"aggregate_tasks", summary_entry(r.aggregate_tasks)},
          {"skipped", r.skipped},
          {"model_scale",
           {{"victim_parameters", r.scale.victim_parameters},
            {"victim_widths", r.scale.victim_widths},
            {"victims", r.scale.victims},
            {"models", r.scale.models},
            {"eval_points", r.scale.eval_points}}}};
}

}  // namespace mfp
