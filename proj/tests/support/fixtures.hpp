#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfp/benchmark.hpp"
#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"
#include "mfp/mlp.hpp"
#include "mfp/tasks.hpp"

namespace mfp::testing {

// Small 3-class 2-D blobs task with overlapping clusters.
SyntheticTaskSpec small_task(std::uint64_t seed = 7, std::uint64_t draw = 0);
MlpSpec small_arch(std::size_t dim, int classes, std::uint64_t seed, std::size_t hidden = 16);
TrainConfig quick_train(int epochs = 20);

// A trained model on small_task(seed); cached per seed.
struct Trained {
  TaskData data;
  ClassifierPtr model;
};
const Trained& trained_model(std::uint64_t seed);

// Two victims, a few stolen and unrelated models per victim; built once.
const BenchmarkTriplet& tiny_benchmark();
BenchmarkConfig tiny_config();

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name);
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

}  // namespace mfp::testing
