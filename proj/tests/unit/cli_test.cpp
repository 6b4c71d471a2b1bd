#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "mfp/commands.hpp"

using namespace mfp;
using mfp::testing::TempDir;
using mfp::testing::read_file;
namespace fs = std::filesystem;

namespace {

fs::path source_dir() {
  const char* env = std::getenv("MFP_SOURCE_DIR");
  return env != nullptr ? fs::path(env) : fs::path(MFP_SOURCE_DIR_FALLBACK);
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

nlohmann::json minimal_config() {
  auto c = mfp::testing::tiny_config();
  c.num_victims = 1;
  c.stolen = {{TaskTag{Stealing::Same, {}}, 1}};
  c.unrelated_per_victim = 2;
  c.calibration_per_victim = 0;
  c.train = mfp::testing::quick_train(5);
  return to_json(c);
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "-q");
  return run_cli(args);
}

}  // namespace

TEST(Cli, GenerateMinimalBenchmark) {
  TempDir dir("cli-generate");
  const auto cfg = dir.path() / "config.json";
  write_text(cfg, minimal_config().dump(2));
  const auto out = dir.path() / "missing" / "bench";
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", out.string(), "--workers", "1"}), kExitOk);
  std::size_t bins = 0;
  for (const auto& e : fs::directory_iterator(out / "models")) bins += e.path().extension() == ".bin";
  EXPECT_EQ(bins, 4u);
  ASSERT_TRUE(fs::exists(out / "manifest.json"));
  const auto first = read_file(out / "manifest.json");
  const auto manifest = nlohmann::json::parse(first);
  EXPECT_EQ(manifest.at("format"), "mfp-benchmark");
  EXPECT_EQ(manifest.at("config").at("num_victims"), 1);

  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", out.string(), "--workers", "2"}), kExitOk);
  EXPECT_EQ(read_file(out / "manifest.json"), first);
}

TEST(Cli, EvaluateWritesReports) {
  TempDir dir("cli-evaluate");
  save_benchmark(mfp::testing::tiny_benchmark(), dir.path() / "bench");
  const auto out = dir.path() / "report";
  ASSERT_EQ(run({"evaluate", "--benchmark", (dir.path() / "bench").string(), "--scheme", "akh", "--budget", "10",
                 "--runs", "3", "--seed", "2", "--workers", "1", "--out", out.string()}),
            kExitOk);
  for (const char* f : {"runs.csv", "summary.csv", "aggregate.csv", "pairs.csv", "pair_stats.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto summary = read_file(out / "summary.csv");
  EXPECT_EQ(count_lines(summary), 1u + 3u);
  std::istringstream rows(summary);
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "scheme,budget,task,mean,std,n_runs");
  while (std::getline(rows, line)) {
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "3");
    EXPECT_NE(line.find(",10,"), std::string::npos);
  }
  const auto j = nlohmann::json::parse(read_file(out / "summary.json"));
  EXPECT_EQ(j.at("run_config").at("seed"), 2);
  EXPECT_EQ(j.at("run_config").at("budget"), 10);
  EXPECT_EQ(count_lines(read_file(out / "runs.csv")), 1u + 3u * (3u + 2u));
}

TEST(Cli, CorruptManifestExitsIncompatible) {
  TempDir dir("cli-corrupt");
  write_text(dir.path() / "manifest.json", "{\"format\": \"mfp-benchmark\"");
  EXPECT_EQ(run({"evaluate", "--benchmark", dir.path().string(), "--scheme", "akh", "--out",
                 (dir.path() / "out").string()}),
            kExitIncompatible);
  EXPECT_EQ(run({"pairs", "--benchmark", dir.path().string(), "--out", (dir.path() / "out").string()}),
            kExitIncompatible);
}

TEST(Cli, SweepGrid) {
  TempDir dir("cli-sweep");
  save_benchmark(mfp::testing::tiny_benchmark(), dir.path() / "bench");
  const auto neg = source_dir() / "configs" / "schemes" / "negative_raw_labels.json";
  ASSERT_TRUE(fs::exists(neg)) << neg;
  const auto out = dir.path() / "sweep";
  ASSERT_EQ(run({"sweep", "--benchmark", (dir.path() / "bench").string(), "--scheme", "akh", "--scheme",
                 neg.string(), "--budgets", "5,10,15,20", "--runs", "2", "--workers", "1", "--out", out.string()}),
            kExitOk);
  const auto grid = read_file(out / "grid.csv");
  EXPECT_EQ(count_lines(grid), 1u + 2u * 8u);
  EXPECT_TRUE(fs::exists(out / "run_config.json"));
  EXPECT_TRUE(fs::exists(out / "grid_tasks.csv"));
  const auto j = nlohmann::json::parse(read_file(out / "summary.json"));
  EXPECT_EQ(j.at("cells").size(), 8u);
}

TEST(Cli, UsageErrors) {
  TempDir dir("cli-usage");
  save_benchmark(mfp::testing::tiny_benchmark(), dir.path() / "bench");
  const auto bench = (dir.path() / "bench").string();
  const auto out = (dir.path() / "out").string();
  EXPECT_EQ(run({"sweep", "--benchmark", bench, "--out", out}), kExitUsage);
  EXPECT_EQ(run({"sweep", "--benchmark", bench, "--scheme", "akh", "--budgets", "20,10", "--out", out}), kExitUsage);
  EXPECT_EQ(run({"evaluate", "--benchmark", bench}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"--version"}), kExitOk);

  const auto bad = dir.path() / "bad.json";
  write_text(bad, "{\n  \"sampler\": {\"type\": \"uniform\"},\n  \"representation\": ,\n}\n");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"evaluate", "--benchmark", bench, "--scheme", bad.string(), "--out", out}), kExitUsage);
  const auto err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("bad.json:3:"), std::string::npos) << err;

  const auto unknown = dir.path() / "unknown.json";
  write_text(unknown, R"({"sampler": {"type": "warp"}})");
  EXPECT_EQ(run({"evaluate", "--benchmark", bench, "--scheme", unknown.string(), "--out", out}), kExitUsage);

  const auto incompatible = dir.path() / "incompatible.json";
  write_text(incompatible, R"({"sampler": {"type": "uniform"}, "representation": {"kind": "pairwise"}})");
  EXPECT_EQ(run({"evaluate", "--benchmark", bench, "--scheme", incompatible.string(), "--out", out}),
            kExitIncompatible);

  // Negative sampling beyond the victims' mistakes cannot run at all.
  EXPECT_EQ(run({"evaluate", "--benchmark", bench, "--scheme", "akh", "--budget", "250", "--out", out}),
            kExitIncompatible);
}
