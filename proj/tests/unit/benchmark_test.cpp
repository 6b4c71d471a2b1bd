#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mfp/benchmark.hpp"
#include "mfp/error.hpp"
#include "mfp/evaluate.hpp"
#include "mfp/distances.hpp"

using namespace mfp;
using mfp::testing::TempDir;

namespace {

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

BenchmarkConfig five_method_config() {
  auto c = mfp::testing::tiny_config();
  c.num_victims = 3;
  c.unrelated_per_victim = 5;
  c.calibration_per_victim = 0;
  c.train = mfp::testing::quick_train(8);
  c.stolen = {{TaskTag{Stealing::Same, {}}, 1},
              {TaskTag{Stealing::Prune, {{"fraction", 0.3}}}, 1},
              {TaskTag{Stealing::Quantize, {{"bits", 6}}}, 1},
              {TaskTag{Stealing::Finetune, {{"epochs", 2}}}, 1},
              {TaskTag{Stealing::LabelExtraction, {{"epochs", 5}}}, 1}};
  return c;
}

std::string pairs_csv(const EvalReport& r) {
  std::ostringstream out;
  write_pairs_csv(r, out);
  return out.str();
}

}  // namespace

TEST(Benchmark, CountsAndTags) {
  const auto b = build_benchmark(five_method_config());
  ASSERT_EQ(b.victims.size(), 3u);
  EXPECT_EQ(b.model_count(), 3u * (1 + 5 + 5));
  for (const auto& v : b.victims) {
    ASSERT_EQ(v.stolen.size(), 5u);
    EXPECT_EQ(v.unrelated.size(), 5u);
    EXPECT_TRUE(v.calibration.empty());
    std::multiset<std::string> tags;
    for (const auto& s : v.stolen) {
      tags.insert(s->tag().name());
      EXPECT_EQ(s->provenance().parent_id, v.model->id());
    }
    EXPECT_EQ(tags, (std::multiset<std::string>{"Same", "Prune", "Quantize", "Finetune", "LabelExtraction"}));
    for (const auto& u : v.unrelated) {
      EXPECT_TRUE(u->provenance().parent_id.empty());
      EXPECT_FALSE(u->tag().positive());
    }
    // The Same copy answers exactly like its victim.
    EXPECT_EQ(hamming_distance(*v.model, *v.stolen[0], v.test), 0.0);
    EXPECT_EQ(v.stolen[0]->probits(v.test.points[0]), v.model->probits(v.test.points[0]));
  }
  EXPECT_NE(b.victims[0].model->id(), b.victims[1].model->id());
  EXPECT_NO_THROW(b.validate());
}

TEST(Benchmark, DeterministicBuildAcrossWorkerCounts) {
  const auto a = build_benchmark(mfp::testing::tiny_config(), 1);
  const auto& b = mfp::testing::tiny_benchmark();
  ASSERT_EQ(a.victims.size(), b.victims.size());
  for (std::size_t v = 0; v < a.victims.size(); ++v) {
    const auto& x = a.victims[v].test.points.front();
    EXPECT_EQ(a.victims[v].model->probits(x), b.victims[v].model->probits(x));
    for (std::size_t i = 0; i < a.victims[v].unrelated.size(); ++i) {
      EXPECT_EQ(a.victims[v].unrelated[i]->probits(x), b.victims[v].unrelated[i]->probits(x));
    }
  }
}

TEST(Benchmark, SaveLoadGivesIdenticalEvaluation) {
  const auto& b = mfp::testing::tiny_benchmark();
  TempDir dir("bench-roundtrip");
  save_benchmark(b, dir.path() / "nested");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "nested" / "manifest.json"));
  const auto loaded = load_benchmark(dir.path() / "nested");
  EXPECT_EQ(loaded.model_count(), b.model_count());
  EXPECT_EQ(to_json(loaded.config), to_json(b.config));

  SchemeSpec calibrated;
  calibrated.sampler = SamplerSpec::adversarial_with();
  calibrated.representation = RepresentationKind::Pairwise;
  calibrated.detector = DetectorPolicy::Calibrated;
  for (const auto& spec : {SchemeSpec::akh_baseline(10), calibrated}) {
    const auto r1 = evaluate(spec, b, 10, 2, 4);
    const auto r2 = evaluate(spec, loaded, 10, 2, 4);
    EXPECT_EQ(pairs_csv(r1), pairs_csv(r2));
  }

  // Saving the loaded copy reproduces the manifest byte for byte.
  save_benchmark(loaded, dir.path() / "again");
  EXPECT_EQ(mfp::testing::read_file(dir.path() / "nested" / "manifest.json"),
            mfp::testing::read_file(dir.path() / "again" / "manifest.json"));
}

TEST(Benchmark, CorruptManifest) {
  const auto& b = mfp::testing::tiny_benchmark();
  TempDir dir("bench-corrupt");
  EXPECT_EQ(code_of([&] { load_benchmark(dir.path()); }), "corrupt-manifest");
  save_benchmark(b, dir.path());
  {
    std::ofstream out(dir.path() / "manifest.json", std::ios::app);
    out << "trailing";
  }
  EXPECT_EQ(code_of([&] { load_benchmark(dir.path()); }), "corrupt-manifest");
  save_benchmark(b, dir.path());
  std::filesystem::remove(dir.path() / "models" / (b.victims[0].unrelated[0]->id() + ".bin"));
  EXPECT_EQ(code_of([&] { load_benchmark(dir.path()); }), "corrupt-manifest");
  save_benchmark(b, dir.path());
  {
    std::ofstream out(dir.path() / "models" / (b.victims[1].model->id() + ".bin"), std::ios::trunc);
    out << "not a model";
  }
  EXPECT_EQ(code_of([&] { load_benchmark(dir.path()); }), "corrupt-manifest");
}

TEST(Benchmark, ConfigValidation) {
  auto c = mfp::testing::tiny_config();
  c.stolen.clear();
  EXPECT_EQ(code_of([&] { c.validate(); }), "empty-task-list");
  EXPECT_EQ(code_of([&] { build_benchmark(c); }), "empty-task-list");
  c = mfp::testing::tiny_config();
  c.stolen.push_back({TaskTag{Stealing::Unrelated, {}}, 1});
  EXPECT_EQ(code_of([&] { c.validate(); }), "bad-config");
  c = mfp::testing::tiny_config();
  c.unrelated_per_victim = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), "bad-config");
}

TEST(Benchmark, ConfigJsonRoundTripAndDefaults) {
  const auto desk = BenchmarkConfig::desk_default();
  EXPECT_EQ(to_json(benchmark_config_from_json(to_json(desk))), to_json(desk));
  EXPECT_EQ(to_json(benchmark_config_from_json(nlohmann::json::object())), to_json(desk));
  const auto tiny = mfp::testing::tiny_config();
  EXPECT_EQ(to_json(benchmark_config_from_json(to_json(tiny))), to_json(tiny));
  EXPECT_EQ(code_of([] { benchmark_config_from_json(nlohmann::json::array()); }), "bad-config");
  EXPECT_EQ(code_of([] { benchmark_config_from_json({{"num_victims", "five"}}); }), "bad-config");
}

TEST(Benchmark, DeskDefaultShape) {
  const auto desk = BenchmarkConfig::desk_default();
  EXPECT_EQ(desk.num_victims, 5u);
  std::size_t stolen = 0;
  for (const auto& s : desk.stolen) stolen += s.count;
  EXPECT_EQ(desk.num_victims * (1 + stolen + desk.unrelated_per_victim + desk.calibration_per_victim), 280u);
}

TEST(Benchmark, ProvenanceIsChecked) {
  auto b = mfp::testing::tiny_benchmark();
  std::swap(b.victims[0].stolen[0], b.victims[0].unrelated[0]);
  EXPECT_EQ(code_of([&] { b.validate(); }), "bad-benchmark");
  b = mfp::testing::tiny_benchmark();
  std::swap(b.victims[0].stolen[0], b.victims[1].stolen[0]);
  EXPECT_EQ(code_of([&] { b.validate(); }), "bad-benchmark");
  b = mfp::testing::tiny_benchmark();
  b.victims[1].unrelated.clear();
  EXPECT_EQ(code_of([&] { b.validate(); }), "bad-benchmark");
}
