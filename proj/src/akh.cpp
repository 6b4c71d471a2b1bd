#include "mfp/akh.hpp"

#include "mfp/error.hpp"
#include "mfp/log.hpp"

namespace mfp {

QuerySet akh_queries(const Classifier& h, const LabeledDataset& data, std::size_t k, std::uint64_t seed,
                     bool* used_fallback) {
  if (k == 0) throw Error("bad-budget", "AKH needs at least one query");
  if (used_fallback != nullptr) *used_fallback = false;
  try {
    return negative_sampler(data, h, k, seed);
  } catch (const InsufficientNegatives& e) {
    if (e.available() > 0) throw;
    if (k > data.size()) throw InsufficientNegatives(0, k);
    log_warn("victim '" + h.id() + "' makes no mistake on the seed set; AKH falls back to uniform queries");
    if (used_fallback != nullptr) *used_fallback = true;
    return uniform_sampler(data, k, seed);
  }
}

AkhResult akh_test(const Classifier& h, const Classifier& h_sus, const LabeledDataset& data, std::size_t k_queries,
                   std::uint64_t seed) {
  AkhResult result;
  const QuerySet queries = akh_queries(h, data, k_queries, seed, &result.used_fallback);
  std::size_t matches = 0;
  for (const auto& x : queries.points) matches += h.label(x) == h_sus.label(x);
  result.queries = queries.size();
  result.match_score = static_cast<double>(matches) / static_cast<double>(queries.size());
  // Strict majority of single-query tests returning 1.
  result.flag = 2 * matches > queries.size();
  return result;
}

}  // namespace mfp
