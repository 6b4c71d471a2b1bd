#pragma once

#include <cstdint>

#include "mfp/dataset.hpp"

namespace mfp {

enum class TaskFamily { Blobs, Moons, Rings };

const char* to_string(TaskFamily f);
TaskFamily task_family_from_string(std::string_view s);

// Largest class count a family can represent.
int max_classes(TaskFamily f);

struct SyntheticTaskSpec {
  TaskFamily family = TaskFamily::Blobs;
  int num_classes = 3;
  std::size_t dim = 2;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  double label_noise = 0.1;  // fraction of training labels flipped, in [0, 0.5)
  // Blobs: per-cluster standard deviation. Moons/rings: noise std is 0.1*spread.
  double spread = 1.0;
  double center_box = 4.0;  // blob centers drawn uniformly in [-box, box]^d
  std::uint64_t seed = 0;   // fixes the concept (cluster centers)
  std::uint64_t draw = 0;   // selects an independent sample of the same concept

  void validate() const;
};

struct TaskData {
  LabeledDataset train;
  LabeledDataset test;
};

// Deterministic in (spec). Class counts are balanced (remainder to the lowest
// classes). Exactly floor(label_noise * n_train) training labels are flipped,
// each to a uniformly chosen different class; test labels are clean.
TaskData generate_task(const SyntheticTaskSpec& spec);

}  // namespace mfp
