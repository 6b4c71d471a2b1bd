#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "mfp/classifier.hpp"

namespace mfp {

enum class Split { Train, Test };

const char* to_string(Split s);
Split split_from_string(std::string_view s);

// Input points with ground-truth concept labels c(x) in [0, num_classes).
struct LabeledDataset {
  std::size_t dim = 0;
  int num_classes = 0;
  std::vector<Vector> points;
  std::vector<int> labels;
  std::vector<Split> splits;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // Throws "bad-dataset" when lengths, dimensions or labels are inconsistent.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  LabeledDataset filter(Split split) const;
  ClassifierPtr concept_model(std::string id = "concept") const;

  bool operator==(const LabeledDataset&) const = default;
};

LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b);

// Dataset over the integer domain {0, ..., labels.size()-1}, for use with
// TableClassifier.
LabeledDataset index_dataset(const std::vector<int>& labels, int num_classes,
                             Split split = Split::Test);

// CSV with header x_1,...,x_d,label,split. Values are written with 17
// significant digits so a write/read cycle is exact. Row order is preserved.
void write_csv(const LabeledDataset& data, const std::filesystem::path& path);
// num_classes <= 0 infers max(label)+1.
LabeledDataset read_csv(const std::filesystem::path& path, int num_classes = 0);

}  // namespace mfp
