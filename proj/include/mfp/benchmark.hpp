#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"
#include "mfp/mlp.hpp"
#include "mfp/tasks.hpp"

namespace mfp {

// One row of the stolen-model recipe: `count` models produced with `tag`
// from every victim. Recognized params per method:
//   Quantize: bits (8)            Prune: fraction (0.5)
//   Finetune: epochs (5), learning_rate (0.01), data (n_train)
//   Transfer: epochs (victim), learning_rate (victim), data (n_train),
//             same_concept (0: a different concept; 1: a fresh draw of the
//             victim's concept), num_classes (task's)
//   *Extraction: epochs (victim), learning_rate (victim), hidden_width
//                (victim's), disjoint_pool (0: query the victim's training
//                inputs; 1: a fresh draw of `queries` points, default n_train)
//   any method: output_topk (k) or output_noise (scale) wraps the result.
struct StolenSpec {
  TaskTag tag;
  std::size_t count = 5;
};

struct BenchmarkConfig {
  std::uint64_t seed = 0;
  // Shared concept; each model is trained on its own draw of it.
  SyntheticTaskSpec task;
  std::vector<std::size_t> hidden = {32};
  Activation activation = Activation::Relu;
  TrainConfig train;
  std::size_t num_victims = 5;
  std::vector<StolenSpec> stolen;
  std::size_t unrelated_per_victim = 10;
  // Unrelated models held by each victim for threshold calibration. They are
  // never scored as benchmark negatives.
  std::size_t calibration_per_victim = 5;

  // "empty-task-list", "bad-config".
  void validate() const;

  static BenchmarkConfig desk_default();
};

nlohmann::json to_json(const BenchmarkConfig& c);
// Missing keys take the desk defaults; errors are "bad-config".
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j);

struct VictimEntry {
  ClassifierPtr model;
  std::uint64_t draw = 0;
  LabeledDataset train;
  LabeledDataset test;
  std::vector<ClassifierPtr> stolen;
  std::vector<ClassifierPtr> unrelated;
  std::vector<ClassifierPtr> calibration;
};

// B = (victims, stolen sets, unrelated sets).
struct BenchmarkTriplet {
  BenchmarkConfig config;
  std::vector<VictimEntry> victims;

  // Provenance checks: stolen entries name their victim as parent and carry a
  // positive tag; unrelated and calibration entries have no parent. Every
  // victim has at least one stolen and one unrelated model.
  // "bad-benchmark" otherwise.
  void validate() const;

  std::size_t model_count() const;
};

BenchmarkTriplet build_benchmark(const BenchmarkConfig& config, std::size_t workers = 1);

// Directory layout: manifest.json, models/<id>.bin, data/<victim>_{train,test}.csv.
// Existing files are overwritten; the directory is created if missing.
void save_benchmark(const BenchmarkTriplet& b, const std::filesystem::path& dir);
// "corrupt-manifest" for anything that does not load cleanly.
BenchmarkTriplet load_benchmark(const std::filesystem::path& dir);

}  // namespace mfp
