#pragma once

#include <optional>
#include <vector>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"

namespace mfp {

// All quantities below are empirical frequencies over the supplied finite
// evaluation set. They throw "empty-evaluation-set" on an empty set.

std::vector<int> predict_labels(const Classifier& h, const std::vector<Vector>& points);

double accuracy(const Classifier& h, const LabeledDataset& data);
double hamming_distance(const Classifier& h, const Classifier& g, const LabeledDataset& data);

// Disagreement rate between h and g restricted to {x : h(x) != c(x)}.
// std::nullopt when h makes no mistake on data (conditioning event empty).
std::optional<double> conditioned_hamming(const Classifier& h, const Classifier& g,
                                          const LabeledDataset& data);

struct PairStats {
  double alpha = 0;        // accuracy of h
  double alpha_prime = 0;  // accuracy of g
  double delta = 0;        // relative Hamming distance
  std::optional<double> delta_c;  // conditioned Hamming distance
  std::size_t n_eval = 0;

  bool delta_c_defined() const { return delta_c.has_value(); }
  // (delta - (1 - alpha')) / (1 - alpha); requires alpha < 1.
  double conditioned_lower_bound() const;
};

PairStats pair_stats(const Classifier& h, const Classifier& g, const LabeledDataset& data);

// Same statistics from precomputed label vectors (h, g, ground truth).
PairStats pair_stats_from_labels(const std::vector<int>& h, const std::vector<int>& g,
                                 const std::vector<int>& truth);

}  // namespace mfp
