#pragma once

#include <cstdint>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"
#include "mfp/query.hpp"

namespace mfp {

// Negative-sample agreement test (AKH). Draw k points the victim gets wrong,
// query the suspect on them, and flag when the suspect repeats the victim's
// answer on a strict majority. An exact copy is always flagged.
struct AkhResult {
  bool flag = false;
  double match_score = 0.0;  // fraction of queries with h(x) == h_sus(x)
  std::size_t queries = 0;
  bool used_fallback = false;  // victim perfect on data: uniform queries instead
};

// The k query points AKH uses. Falls back to uniform sampling (with a
// warning) only when h makes no mistake on data; a nonzero shortfall raises
// InsufficientNegatives.
QuerySet akh_queries(const Classifier& h, const LabeledDataset& data, std::size_t k, std::uint64_t seed,
                     bool* used_fallback = nullptr);

AkhResult akh_test(const Classifier& h, const Classifier& h_sus, const LabeledDataset& data, std::size_t k_queries,
                   std::uint64_t seed);

}  // namespace mfp
