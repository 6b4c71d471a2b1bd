#include "mfp/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfp/error.hpp"

namespace mfp {

const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw Error("bad-split", std::string(s));
}

void LabeledDataset::validate() const {
  if (points.size() != labels.size() || points.size() != splits.size()) {
    throw Error("bad-dataset", "points, labels and splits differ in length");
  }
  if (num_classes < 2) throw Error("bad-dataset", "num_classes must be >= 2");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) {
      throw Error("bad-dataset", "row " + std::to_string(i) + " has dimension " +
                                     std::to_string(points[i].size()) + ", expected " +
                                     std::to_string(dim));
    }
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error("bad-dataset", "row " + std::to_string(i) + " label " + std::to_string(labels[i]));
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out{dim, num_classes, {}, {}, {}};
  out.points.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points.at(i));
    out.labels.push_back(labels.at(i));
    out.splits.push_back(splits.at(i));
  }
  return out;
}

LabeledDataset LabeledDataset::filter(Split split) const {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < size(); ++i) {
    if (splits[i] == split) keep.push_back(i);
  }
  return subset(keep);
}

ClassifierPtr LabeledDataset::concept_model(std::string id) const {
  return std::make_shared<ConceptClassifier>(std::move(id), points, labels, num_classes);
}

LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.dim != b.dim) throw Error("incompatible-task", "dimension mismatch in concatenate");
  LabeledDataset out = a;
  out.num_classes = std::max(a.num_classes, b.num_classes);
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.splits.insert(out.splits.end(), b.splits.begin(), b.splits.end());
  return out;
}

LabeledDataset index_dataset(const std::vector<int>& labels, int num_classes, Split split) {
  LabeledDataset out{1, num_classes, {}, labels, std::vector<Split>(labels.size(), split)};
  out.points.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.points.push_back({static_cast<double>(i)});
  out.validate();
  return out;
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  for (std::size_t j = 0; j < data.dim; ++j) out << "x_" << (j + 1) << ',';
  out << "label,split\n";
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.points[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << data.labels[i] << ',' << to_string(data.splits[i]) << '\n';
  }
  if (!out) throw Error("io-error", "write failed for " + path.string());
}

LabeledDataset read_csv(const std::filesystem::path& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("bad-dataset", path.string() + ": missing header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 3) throw Error("bad-dataset", path.string() + ":1: need x_1..x_d,label,split");
  LabeledDataset data;
  data.dim = columns - 2;
  std::size_t line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vector x;
    x.reserve(data.dim);
    try {
      for (std::size_t j = 0; j < data.dim; ++j) {
        if (!std::getline(ss, cell, ',')) throw Error("bad-dataset", "too few columns");
        x.push_back(std::stod(cell));
      }
      if (!std::getline(ss, cell, ',')) throw Error("bad-dataset", "missing label");
      const int label = std::stoi(cell);
      if (!std::getline(ss, cell, ',')) throw Error("bad-dataset", "missing split");
      data.splits.push_back(split_from_string(cell));
      data.labels.push_back(label);
      max_label = std::max(max_label, label);
    } catch (const Error& e) {
      throw Error("bad-dataset", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error("bad-dataset", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    data.points.push_back(std::move(x));
  }
  data.num_classes = num_classes > 0 ? num_classes : std::max(2, max_label + 1);
  data.validate();
  return data;
}

}  // namespace mfp
