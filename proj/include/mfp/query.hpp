#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"

namespace mfp {

inline constexpr int kUnknownLabel = -1;

// An ordered query set S. `labels` holds the ground-truth concept of points
// taken from a seed set and kUnknownLabel for generated points. `pairing`
// lists (seed index, derived index) couples for adversarial/subsampled sets.
struct QuerySet {
  std::vector<Vector> points;
  std::vector<int> labels;
  std::vector<std::pair<std::size_t, std::size_t>> pairing;
  std::string provenance;

  std::size_t size() const { return points.size(); }
  bool has_pairing() const { return !pairing.empty(); }
  void validate() const;

  static QuerySet from_dataset(const LabeledDataset& data, std::string provenance = "dataset");
};

struct AdversarialParams {
  // l-infinity radius; unset selects 0.1 x mean per-dimension range of the seed pool.
  std::optional<double> epsilon;
  int steps = 20;
  // Unset selects epsilon / 8.
  std::optional<double> step_size;
};

// Mean over dimensions of (max - min) of the points.
double mean_dimension_range(const std::vector<Vector>& points);

// s points drawn without replacement; no pairing. "budget-exceeds-pool".
QuerySet uniform_sampler(const LabeledDataset& seed_set, std::size_t s, std::uint64_t seed);
QuerySet uniform_sampler(const QuerySet& pool, std::size_t s, std::uint64_t seed);

// s points drawn uniformly from {x : h(x) != c(x)}. Throws
// InsufficientNegatives (carrying the available count) when there are fewer.
QuerySet negative_sampler(const LabeledDataset& seed_set, const Classifier& h, std::size_t s, std::uint64_t seed);
QuerySet negative_sampler(const QuerySet& pool, const Classifier& h, std::size_t s, std::uint64_t seed);

// s/2 seeds, each pushed by signed-gradient ascent on the cross-entropy of
// h(u) against h(x) and projected onto ||u - x||_inf <= epsilon. Returns
// (seeds, adversarial points) with pairing (i, i + s/2).
QuerySet adversarial_sampler(const LabeledDataset& seed_set, const Classifier& h, const AdversarialParams& params,
                             std::size_t s, std::uint64_t seed);
QuerySet adversarial_sampler(const QuerySet& pool, const Classifier& h, const AdversarialParams& params,
                             std::size_t s, std::uint64_t seed);

// n_seeds = s / (1 + k_variants) seeds followed by k_variants masked copies of
// each: every coordinate is kept with probability vicinity_scale, zeroed
// otherwise. Pairing links each variant to its seed.
QuerySet subsampler(const LabeledDataset& seed_set, std::size_t k_variants, double vicinity_scale, std::size_t s,
                    std::uint64_t seed);
QuerySet subsampler(const QuerySet& pool, std::size_t k_variants, double vicinity_scale, std::size_t s,
                    std::uint64_t seed);

// Declarative sampler; Chain feeds each stage's output to the next stage as
// its seed pool.
struct SamplerSpec {
  enum class Type { Uniform, Negative, Adversarial, Subsample, Chain };

  Type type = Type::Uniform;
  AdversarialParams adversarial;
  std::size_t k_variants = 9;
  double vicinity = 0.7;
  std::vector<SamplerSpec> stages;

  static SamplerSpec uniform();
  static SamplerSpec negative();
  static SamplerSpec adversarial_with(AdversarialParams params = {});
  static SamplerSpec subsample(std::size_t k_variants, double vicinity);

  void validate() const;
  std::string describe() const;
  bool produces_pairing() const;
  bool needs_gradients() const;
  bool needs_negatives() const;
  // Seed-pool size this sampler draws from to emit s queries.
  std::size_t seeds_needed(std::size_t s) const;
  // Whether budget s has a valid shape for this sampler.
  bool accepts_budget(std::size_t s) const;
};

const char* to_string(SamplerSpec::Type t);

SamplerSpec chain_sampler(SamplerSpec first, SamplerSpec second);

// Runs any sampler. Automatic adversarial parameters are resolved against
// the initial pool, so chained stages share one epsilon.
QuerySet run_sampler(const SamplerSpec& spec, const QuerySet& pool, const Classifier& h, std::size_t s,
                     std::uint64_t seed);
QuerySet run_sampler(const SamplerSpec& spec, const LabeledDataset& seed_set, const Classifier& h, std::size_t s,
                     std::uint64_t seed);

}  // namespace mfp
