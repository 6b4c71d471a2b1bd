#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mfp/task_tag.hpp"

namespace mfp {

using Vector = std::vector<double>;

// What a querier may observe from a model. Each level includes all weaker
// ones: Gradients > Probits > TopK(k) > LabelOnly.
struct AccessLevel {
  enum class Kind { LabelOnly = 0, TopK = 1, Probits = 2, Gradients = 3 };

  Kind kind = Kind::LabelOnly;
  int k = 1;  // only meaningful for TopK

  static AccessLevel label_only() { return {Kind::LabelOnly, 1}; }
  static AccessLevel top_k(int k) { return {Kind::TopK, k}; }
  static AccessLevel probits() { return {Kind::Probits, 0}; }
  static AccessLevel gradients() { return {Kind::Gradients, 0}; }

  bool permits(const AccessLevel& required) const;
  std::string to_string() const;
};

struct Provenance {
  TaskTag tag;
  std::string parent_id;  // empty for independently trained models
};

struct ClassifierInfo {
  std::string id;
  AccessLevel access;
  int num_classes = 0;
  std::size_t input_dim = 0;
  Provenance provenance;
};

// A queryable classifier. Models are deterministic functions: repeated queries
// on the same input return identical answers, and handles carry no mutable
// state, so they may be shared between threads. Class labels are 0-based.
class Classifier {
 public:
  virtual ~Classifier() = default;

  const std::string& id() const { return info_.id; }
  const AccessLevel& access() const { return info_.access; }
  int num_classes() const { return info_.num_classes; }
  std::size_t input_dim() const { return info_.input_dim; }
  const Provenance& provenance() const { return info_.provenance; }
  const TaskTag& tag() const { return info_.provenance.tag; }

  int label(std::span<const double> x) const;
  // The k most probable labels, ties broken by ascending label index.
  std::vector<int> top_k(std::span<const double> x, int k) const;
  Vector probits(std::span<const double> x) const;
  // Gradient of logit `class_index` with respect to the input.
  Vector input_gradient(std::span<const double> x, int class_index) const;

 protected:
  explicit Classifier(ClassifierInfo info);

  virtual int compute_label(std::span<const double> x) const;
  virtual std::vector<int> compute_top_k(std::span<const double> x, int k) const;
  virtual Vector compute_probits(std::span<const double> x) const;
  virtual Vector compute_input_gradient(std::span<const double> x, int class_index) const;

 private:
  void require(const AccessLevel& needed, const char* what) const;
  void check_input(std::span<const double> x) const;

  ClassifierInfo info_;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

// Argmax with ties to the lowest index.
int argmax(std::span<const double> v);
// Indices of the k largest entries, ties by ascending index.
std::vector<int> top_k_indices(std::span<const double> v, int k);

// Label-only model over the integer input space {0, ..., n-1}: the single
// input coordinate is rounded to an index into a label table. Used for
// exhaustive-enumeration checks and hand-built model pairs.
class TableClassifier final : public Classifier {
 public:
  TableClassifier(std::string id, std::vector<int> table, int num_classes,
                  Provenance provenance = {});

  const std::vector<int>& table() const { return table_; }

 protected:
  int compute_label(std::span<const double> x) const override;

 private:
  std::vector<int> table_;
};

// The ground-truth concept of a finite point set exposed as a model: returns
// the recorded label of any point of the set, errors on anything else.
class ConceptClassifier final : public Classifier {
 public:
  ConceptClassifier(std::string id, const std::vector<Vector>& points,
                    const std::vector<int>& labels, int num_classes);

 protected:
  int compute_label(std::span<const double> x) const override;

 private:
  std::map<Vector, int> lookup_;
};

}  // namespace mfp
