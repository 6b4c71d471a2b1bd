#include "mfp/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfp/error.hpp"

namespace mfp {

namespace {
int rank(AccessLevel::Kind k) { return static_cast<int>(k); }
}  // namespace

std::string_view to_string(Stealing s) {
  switch (s) {
    case Stealing::Same: return "Same";
    case Stealing::Quantize: return "Quantize";
    case Stealing::Finetune: return "Finetune";
    case Stealing::Transfer: return "Transfer";
    case Stealing::Prune: return "Prune";
    case Stealing::ProbitExtraction: return "ProbitExtraction";
    case Stealing::LabelExtraction: return "LabelExtraction";
    case Stealing::AdversarialLabelExtraction: return "AdversarialLabelExtraction";
    case Stealing::Unrelated: return "Unrelated";
  }
  return "Unrelated";
}

Stealing stealing_from_string(std::string_view name) {
  for (Stealing s : {Stealing::Same, Stealing::Quantize, Stealing::Finetune, Stealing::Transfer,
                     Stealing::Prune, Stealing::ProbitExtraction, Stealing::LabelExtraction,
                     Stealing::AdversarialLabelExtraction, Stealing::Unrelated}) {
    if (to_string(s) == name) return s;
  }
  throw Error("unknown-task-tag", std::string(name));
}

bool is_model_leak(Stealing s) {
  switch (s) {
    case Stealing::Same:
    case Stealing::Quantize:
    case Stealing::Finetune:
    case Stealing::Transfer:
    case Stealing::Prune:
      return true;
    default:
      return false;
  }
}

double TaskTag::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

bool AccessLevel::permits(const AccessLevel& required) const {
  if (rank(kind) != rank(required.kind)) return rank(kind) > rank(required.kind);
  if (kind == Kind::TopK) return k >= required.k;
  return true;
}

std::string AccessLevel::to_string() const {
  switch (kind) {
    case Kind::LabelOnly: return "labels";
    case Kind::TopK: return "top" + std::to_string(k);
    case Kind::Probits: return "probits";
    case Kind::Gradients: return "gradients";
  }
  return "labels";
}

int argmax(std::span<const double> v) {
  if (v.empty()) throw Error("empty-vector", "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<int> top_k_indices(std::span<const double> v, int k) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(k, 0))));
  return idx;
}

Classifier::Classifier(ClassifierInfo info) : info_(std::move(info)) {
  if (info_.num_classes < 2) throw Error("bad-model", "num_classes must be >= 2");
  if (info_.input_dim < 1) throw Error("bad-model", "input_dim must be >= 1");
}

void Classifier::require(const AccessLevel& needed, const char* what) const {
  if (!info_.access.permits(needed)) {
    throw Error("access-insufficient", std::string(what) + " needs " + needed.to_string() +
                                           " access, model '" + info_.id + "' exposes " +
                                           info_.access.to_string());
  }
}

void Classifier::check_input(std::span<const double> x) const {
  if (x.size() != info_.input_dim) {
    throw Error("dimension-mismatch", "model '" + info_.id + "' expects dimension " +
                                          std::to_string(info_.input_dim) + ", got " +
                                          std::to_string(x.size()));
  }
}

int Classifier::label(std::span<const double> x) const {
  check_input(x);
  return compute_label(x);
}

std::vector<int> Classifier::top_k(std::span<const double> x, int k) const {
  if (k < 1 || k > info_.num_classes) throw Error("bad-k", "top-k with k=" + std::to_string(k));
  require(AccessLevel::top_k(k), "top-k query");
  check_input(x);
  return compute_top_k(x, k);
}

Vector Classifier::probits(std::span<const double> x) const {
  require(AccessLevel::probits(), "probit query");
  check_input(x);
  return compute_probits(x);
}

Vector Classifier::input_gradient(std::span<const double> x, int class_index) const {
  if (info_.access.kind != AccessLevel::Kind::Gradients) {
    throw Error("gradient-required", "model '" + info_.id + "' exposes " + info_.access.to_string());
  }
  if (class_index < 0 || class_index >= info_.num_classes) {
    throw Error("bad-class", "class index " + std::to_string(class_index));
  }
  check_input(x);
  return compute_input_gradient(x, class_index);
}

int Classifier::compute_label(std::span<const double> x) const { return argmax(compute_probits(x)); }

std::vector<int> Classifier::compute_top_k(std::span<const double> x, int k) const {
  return top_k_indices(compute_probits(x), k);
}

Vector Classifier::compute_probits(std::span<const double>) const {
  throw Error("access-insufficient", "model '" + info_.id + "' has no probit output");
}

Vector Classifier::compute_input_gradient(std::span<const double>, int) const {
  throw Error("gradient-required", "model '" + info_.id + "' has no gradient output");
}

TableClassifier::TableClassifier(std::string id, std::vector<int> table, int num_classes,
                                 Provenance provenance)
    : Classifier({std::move(id), AccessLevel::label_only(), num_classes, 1, std::move(provenance)}),
      table_(std::move(table)) {
  for (int l : table_) {
    if (l < 0 || l >= num_classes) throw Error("bad-label", "table label " + std::to_string(l));
  }
}

int TableClassifier::compute_label(std::span<const double> x) const {
  const double r = std::round(x[0]);
  if (!(r >= 0) || r >= static_cast<double>(table_.size())) {
    throw Error("outside-domain", "table classifier '" + id() + "' queried at " + std::to_string(x[0]));
  }
  return table_[static_cast<std::size_t>(r)];
}

ConceptClassifier::ConceptClassifier(std::string id, const std::vector<Vector>& points,
                                     const std::vector<int>& labels, int num_classes)
    : Classifier({std::move(id), AccessLevel::label_only(), num_classes,
                  points.empty() ? 1 : points.front().size(), {}}) {
  if (points.size() != labels.size()) throw Error("bad-dataset", "points/labels length mismatch");
  for (std::size_t i = 0; i < points.size(); ++i) lookup_.emplace(points[i], labels[i]);
}

int ConceptClassifier::compute_label(std::span<const double> x) const {
  auto it = lookup_.find(Vector(x.begin(), x.end()));
  if (it == lookup_.end()) throw Error("outside-domain", "concept '" + id() + "' undefined at query point");
  return it->second;
}

}  // namespace mfp
