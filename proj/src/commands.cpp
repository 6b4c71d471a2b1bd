#include "mfp/commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mfp/benchmark.hpp"
#include "mfp/error.hpp"
#include "mfp/evaluate.hpp"
#include "mfp/log.hpp"
#include "mfp/parallel.hpp"
#include "mfp/version.hpp"

namespace mfp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Raised for problems the user fixes by editing flags or input files.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompatibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses JSON, anchoring syntax errors to line:column.
json parse_json_file(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw UsageError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

SchemeSpec load_scheme(const std::string& path_or_name) {
  if (path_or_name == "akh" || path_or_name == "AKH") return SchemeSpec::akh_baseline();
  const json j = parse_json_file(path_or_name);
  try {
    return scheme_from_json(j);
  } catch (const Error& e) {
    if (e.code() == "incompatible-scheme" || e.code() == "incompatible-chain") {
      throw IncompatibleError(path_or_name + ": " + e.what());
    }
    throw UsageError(path_or_name + ": " + e.what());
  }
}

BenchmarkTriplet open_benchmark(const std::string& dir) {
  try {
    return load_benchmark(dir);
  } catch (const Error& e) {
    throw IncompatibleError(e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::size_t> parse_budgets(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw UsageError("--budgets: '" + item + "' is not a positive integer");
    }
  }
  if (out.empty()) throw UsageError("--budgets: empty list");
  if (!std::is_sorted(out.begin(), out.end())) throw UsageError("--budgets must be ascending");
  return out;
}

struct Common {
  std::string benchmark;
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  std::size_t workers = default_workers();
  std::string out;
};

json common_json(const Common& c) {
  return {{"benchmark", c.benchmark}, {"runs", c.runs}, {"seed", c.seed}, {"workers", c.workers}, {"out", c.out}};
}

int cmd_generate(const std::string& config_path, const std::string& out_dir, std::size_t workers) {
  BenchmarkConfig config = BenchmarkConfig::desk_default();
  if (!config_path.empty()) {
    const json j = parse_json_file(config_path);
    try {
      config = benchmark_config_from_json(j);
    } catch (const Error& e) {
      throw UsageError(config_path + ": " + e.what());
    }
  }
  const auto b = build_benchmark(config, workers);
  save_benchmark(b, out_dir);
  std::cout << "wrote " << b.model_count() << " models for " << b.victims.size() << " victims to " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& scheme_path, std::size_t budget) {
  const SchemeSpec scheme = load_scheme(scheme_path);
  const auto b = open_benchmark(c.benchmark);
  const auto report = evaluate(scheme, b, budget, c.runs, c.seed, {c.workers, true});
  if (!report.feasible) {
    throw IncompatibleError("scheme " + report.scheme + " cannot run on " + c.benchmark + " at budget " +
                            std::to_string(budget) + (report.skipped.empty() ? "" : ": " + report.skipped.front()));
  }
  fs::create_directories(c.out);
  auto runs = open_out(fs::path(c.out) / "runs.csv");
  write_runs_csv({report}, runs);
  auto summary = open_out(fs::path(c.out) / "summary.csv");
  write_summary_csv(report, summary);
  auto aggregate = open_out(fs::path(c.out) / "aggregate.csv");
  write_aggregate_csv(report, aggregate);
  auto pairs = open_out(fs::path(c.out) / "pairs.csv");
  write_pairs_csv(report, pairs);
  auto stats = open_out(fs::path(c.out) / "pair_stats.csv");
  write_pair_stats_csv(report.pair_stats, stats);
  json j = summary_json(report);
  json run_config = common_json(c);
  run_config["command"] = "evaluate";
  run_config["scheme"] = to_json(scheme);
  run_config["budget"] = budget;
  j["run_config"] = run_config;
  auto js = open_out(fs::path(c.out) / "summary.json");
  js << j.dump(2) << "\n";

  for (const auto& t : report.tasks) {
    std::printf("%-28s TPR@5%% = %.3f +- %.3f\n", t.task.c_str(), t.mean, t.std);
  }
  std::printf("%-28s TPR@5%% = %.3f +- %.3f\n", "aggregate (pairs)", report.aggregate_pairs.mean,
              report.aggregate_pairs.std);
  std::printf("%-28s TPR@5%% = %.3f +- %.3f\n", "aggregate (tasks)", report.aggregate_tasks.mean,
              report.aggregate_tasks.std);
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& scheme_paths, const std::string& budgets_text) {
  if (scheme_paths.empty()) throw UsageError("sweep needs at least one --scheme");
  const auto budgets = parse_budgets(budgets_text);
  std::vector<SchemeSpec> schemes;
  for (const auto& p : scheme_paths) schemes.push_back(load_scheme(p));
  const auto b = open_benchmark(c.benchmark);

  fs::create_directories(c.out);
  json run_config = common_json(c);
  run_config["command"] = "sweep";
  run_config["budgets"] = budgets;
  run_config["schemes"] = json::array();
  for (const auto& s : schemes) run_config["schemes"].push_back(to_json(s));
  auto cfg = open_out(fs::path(c.out) / "run_config.json");
  cfg << json{{"toolkit_version", kVersion}, {"run_config", run_config}}.dump(2) << "\n";

  auto grid = open_out(fs::path(c.out) / "grid.csv");
  grid << "scheme,budget,run,seed,tpr_aggregate_pairs,tpr_aggregate_tasks,skipped_victims\n" << std::flush;
  auto tasks = open_out(fs::path(c.out) / "grid_tasks.csv");
  tasks << "scheme,budget,run,seed,task,tpr_at_5\n" << std::flush;
  json cells = json::array();
  for (const auto& scheme : schemes) {
    for (std::size_t budget : budgets) {
      const auto r = evaluate(scheme, b, budget, c.runs, c.seed, {c.workers, false});
      if (!r.feasible) {
        log_warn("skipped cell " + r.scheme + " @ " + std::to_string(budget) + ": infeasible");
        continue;
      }
      for (std::size_t i = 0; i < r.n_runs; ++i) {
        std::size_t skipped = 0;
        const std::string prefix = "run " + std::to_string(i) + " ";
        for (const auto& s : r.skipped) skipped += s.rfind(prefix, 0) == 0;
        grid << r.scheme << ',' << budget << ',' << i << ',' << r.run_seeds[i] << ','
             << json(r.aggregate_pairs.runs[i]).dump() << ',' << json(r.aggregate_tasks.runs[i]).dump() << ','
             << skipped << '\n';
      }
      grid << std::flush;
      write_runs_csv({r}, tasks, false);
      tasks << std::flush;
      cells.push_back(summary_json(r));
      std::printf("%-40s budget %4zu  TPR@5%% = %.3f +- %.3f\n", r.scheme.c_str(), budget, r.aggregate_pairs.mean,
                  r.aggregate_pairs.std);
    }
  }
  auto js = open_out(fs::path(c.out) / "summary.json");
  js << json{{"toolkit_version", kVersion}, {"run_config", run_config}, {"cells", cells}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_pairs(const std::string& benchmark, const std::string& split, const std::string& out, std::size_t workers) {
  const auto b = open_benchmark(benchmark);
  Split s;
  try {
    s = split_from_string(split);
  } catch (const Error& e) {
    throw UsageError(std::string("--split: ") + e.what());
  }
  const auto report = pair_distance_report(b, s, workers);
  fs::create_directories(out);
  auto pairs = open_out(fs::path(out) / "pair_stats.csv");
  write_pair_stats_csv(report.pairs, pairs);
  auto groups = open_out(fs::path(out) / "distance_groups.csv");
  write_distance_groups_csv(report, groups);
  auto js = open_out(fs::path(out) / "summary.json");
  js << json{{"toolkit_version", kVersion},
             {"run_config", {{"command", "pairs"}, {"benchmark", benchmark}, {"split", split}}},
             {"negative_p5", report.negative_p5},
             {"overlap", report.overlap}}
            .dump(2)
     << "\n";
  for (const auto& g : report.groups) {
    std::printf("%-28s %s  n=%3zu  mean delta_C = %.3f\n", g.task.c_str(), g.positive ? "pos" : "neg",
                g.delta_c.size(), g.mean);
  }
  std::printf("overlap (positives above negative 5th percentile) = %.3f\n", report.overlap);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app("Model fingerprinting toolkit", "mfp");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.add_flag("-v,--verbose", verbose, "Progress messages");

  std::string config, out_dir;
  std::size_t gen_workers = default_workers();
  auto* gen = app.add_subcommand("generate", "Build a benchmark and write it to disk");
  gen->add_option("--config", config, "Benchmark config JSON (desk default if omitted)");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--workers", gen_workers, "Worker threads")->check(CLI::PositiveNumber);

  Common ev;
  std::string scheme_path;
  std::size_t budget = 100;
  auto* eval = app.add_subcommand("evaluate", "Evaluate one scheme on a benchmark");
  eval->add_option("--benchmark", ev.benchmark, "Benchmark directory")->required();
  eval->add_option("--scheme", scheme_path, "Scheme JSON, or 'akh'")->required();
  eval->add_option("--budget", budget, "Query budget")->check(CLI::PositiveNumber);
  eval->add_option("--runs", ev.runs, "Independent runs")->check(CLI::PositiveNumber);
  eval->add_option("--seed", ev.seed, "Root seed; run r uses seed + r");
  eval->add_option("--workers", ev.workers, "Worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--out", ev.out, "Report directory")->required();

  Common sw;
  std::vector<std::string> scheme_paths;
  std::string budgets = "10,25,50,100";
  auto* sweep = app.add_subcommand("sweep", "Evaluate schemes over a budget grid");
  sweep->add_option("--benchmark", sw.benchmark, "Benchmark directory")->required();
  sweep->add_option("--scheme", scheme_paths, "Scheme JSON, or 'akh' (repeatable)");
  sweep->add_option("--budgets", budgets, "Comma-separated ascending budgets");
  sweep->add_option("--runs", sw.runs, "Independent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sw.seed, "Root seed; run r uses seed + r");
  sweep->add_option("--workers", sw.workers, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sw.out, "Report directory")->required();

  std::string pairs_bench, pairs_split = "test", pairs_out;
  std::size_t pairs_workers = default_workers();
  auto* pairs = app.add_subcommand("pairs", "Conditioned Hamming distance table for every pair");
  pairs->add_option("--benchmark", pairs_bench, "Benchmark directory")->required();
  pairs->add_option("--split", pairs_split, "Evaluation split: train or test");
  pairs->add_option("--workers", pairs_workers, "Worker threads")->check(CLI::PositiveNumber);
  pairs->add_option("--out", pairs_out, "Report directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warn);

  try {
    if (*gen) return cmd_generate(config, out_dir, gen_workers);
    if (*eval) return cmd_evaluate(ev, scheme_path, budget);
    if (*sweep) return cmd_sweep(sw, scheme_paths, budgets);
    if (*pairs) return cmd_pairs(pairs_bench, pairs_split, pairs_out, pairs_workers);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IncompatibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIncompatible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == "incompatible-scheme" ? kExitIncompatible : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace mfp
