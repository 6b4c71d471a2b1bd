#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfp/benchmark.hpp"
#include "mfp/distances.hpp"
#include "mfp/scheme.hpp"

namespace mfp {

struct EvalOptions {
  std::size_t workers = 1;
  bool pair_stats = true;  // compute alpha/delta/delta_C for every pair
};

struct PairScore {
  std::size_t run = 0;
  std::string victim;
  std::string suspect;
  std::string task;  // tag name
  bool positive = false;
  double distance = 0.0;
  double score = 0.0;  // detector output, lower = more suspicious
  std::optional<bool> flag;
};

struct PairStatRecord {
  std::string victim;
  std::string suspect;
  std::string task;
  bool positive = false;
  PairStats stats;
};

// TPR@5% of one task (or aggregate) across runs.
struct TaskSummary {
  std::string task;
  std::vector<double> runs;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over runs (0 for one run)
};

struct ModelScale {
  std::size_t victim_parameters = 0;
  std::vector<std::size_t> victim_widths;
  std::size_t victims = 0;
  std::size_t models = 0;
  std::size_t eval_points = 0;  // seed-split size of the first victim
};

struct EvalReport {
  std::string scheme;
  nlohmann::json scheme_spec;
  std::size_t budget = 0;
  std::size_t n_runs = 0;
  std::uint64_t root_seed = 0;
  std::vector<std::uint64_t> run_seeds;
  double fpr_cap = 0.05;
  // Per positive tag: that tag's stolen models vs all unrelated models.
  std::vector<TaskSummary> tasks;
  // All stolen models as positives, one ROC per run.
  TaskSummary aggregate_pairs;
  // Mean of the per-task values, per run.
  TaskSummary aggregate_tasks;
  std::vector<PairScore> pairs;
  std::vector<PairStatRecord> pair_stats;
  // "run r victim v: reason" for every victim a run had to skip.
  std::vector<std::string> skipped;
  ModelScale scale;
  // False when every victim was skipped in some run; summaries are then empty.
  bool feasible = true;

  const TaskSummary* task(const std::string& name) const;
};

double sample_std(const std::vector<double>& values);

// Scores every (victim, stolen) and (victim, unrelated) pair in each run and
// reports TPR at FPR <= 5% per task. Run r uses seed `seed + r`; victim v in
// that run uses derive_seed(seed + r, {v}). Victims whose sampler is
// infeasible are skipped with a log line.
EvalReport evaluate(const SchemeSpec& scheme, const BenchmarkTriplet& benchmark, std::size_t budget,
                    std::size_t n_runs = 5, std::uint64_t seed = 0, const EvalOptions& options = {});

// evaluate() for each budget in ascending order.
std::vector<EvalReport> budget_sweep(const SchemeSpec& scheme, const BenchmarkTriplet& benchmark,
                                     const std::vector<std::size_t>& budgets, std::size_t n_runs = 5,
                                     std::uint64_t seed = 0, const EvalOptions& options = {});

// Conditioned Hamming distances per pair, grouped by tag.
struct DistanceGroup {
  std::string task;
  bool positive = false;
  std::vector<double> delta_c;  // defined values only
  std::size_t undefined = 0;
  double mean = 0.0;
};

struct DistanceReport {
  std::vector<PairStatRecord> pairs;
  std::vector<DistanceGroup> groups;
  // 5th percentile (linear interpolation) of negative-pair delta_C and the
  // fraction of positive-pair delta_C strictly above it.
  double negative_p5 = 0.0;
  double overlap = 0.0;
};

double percentile(std::vector<double> values, double q);

DistanceReport pair_distance_report(const BenchmarkTriplet& benchmark, Split split = Split::Test,
                                    std::size_t workers = 1);

// Report writers. Output is deterministic: no timestamps, fixed ordering.
void write_runs_csv(const std::vector<EvalReport>& reports, std::ostream& out, bool header = true);
void write_summary_csv(const EvalReport& report, std::ostream& out);
void write_aggregate_csv(const EvalReport& report, std::ostream& out);
void write_pairs_csv(const EvalReport& report, std::ostream& out);
void write_pair_stats_csv(const std::vector<PairStatRecord>& pairs, std::ostream& out);
void write_distance_groups_csv(const DistanceReport& report, std::ostream& out);
nlohmann::json summary_json(const EvalReport& report);

}  // namespace mfp
