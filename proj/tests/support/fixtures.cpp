#include "fixtures.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <unistd.h>

namespace mfp::testing {

SyntheticTaskSpec small_task(std::uint64_t seed, std::uint64_t draw) {
  SyntheticTaskSpec s;
  s.family = TaskFamily::Blobs;
  s.num_classes = 3;
  s.dim = 2;
  s.n_train = 300;
  s.n_test = 300;
  s.label_noise = 0.1;
  s.spread = 1.0;
  s.center_box = 2.0;
  s.seed = seed;
  s.draw = draw;
  return s;
}

MlpSpec small_arch(std::size_t dim, int classes, std::uint64_t seed, std::size_t hidden) {
  return MlpSpec{{dim, hidden, static_cast<std::size_t>(classes)}, Activation::Relu, seed};
}

TrainConfig quick_train(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 32;
  return cfg;
}

const Trained& trained_model(std::uint64_t seed) {
  static std::mutex mu;
  static std::map<std::uint64_t, Trained> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(seed);
  if (it == cache.end()) {
    Trained t;
    t.data = generate_task(small_task(seed));
    t.model = train(t.data.train, small_arch(2, 3, seed), quick_train(), "m" + std::to_string(seed));
    it = cache.emplace(seed, std::move(t)).first;
  }
  return it->second;
}

BenchmarkConfig tiny_config() {
  BenchmarkConfig c;
  c.seed = 3;
  c.task = small_task(11);
  c.hidden = {16};
  c.train = quick_train(15);
  c.num_victims = 2;
  c.stolen = {{TaskTag{Stealing::Same, {}}, 2},
              {TaskTag{Stealing::Quantize, {{"bits", 8}}}, 2},
              {TaskTag{Stealing::LabelExtraction, {}}, 2}};
  c.unrelated_per_victim = 4;
  c.calibration_per_victim = 3;
  return c;
}

const BenchmarkTriplet& tiny_benchmark() {
  static const BenchmarkTriplet b = build_benchmark(tiny_config(), 2);
  return b;
}

TempDir::TempDir(const std::string& name) {
  path_ = std::filesystem::temp_directory_path() /
          ("mfp-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mfp::testing
