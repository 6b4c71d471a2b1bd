#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"
#include "mfp/fingerprint.hpp"
#include "mfp/query.hpp"

namespace mfp {

enum class DetectorPolicy {
  Direct,      // score = fingerprint distance
  Calibrated,  // score = p-value of the distance against a pool of unrelated models
};

const char* to_string(DetectorPolicy p);

// A (Query, Representation, Detection) triple, or the AKH baseline.
struct SchemeSpec {
  std::string name;
  bool akh = false;
  SamplerSpec sampler;
  Split seed_split = Split::Test;
  RepresentationKind representation = RepresentationKind::RawLabels;
  InnerDistance inner = InnerDistance::Cosine;
  DetectorPolicy detector = DetectorPolicy::Direct;
  double target_fpr = 0.05;
  std::size_t budget = 100;

  static SchemeSpec akh_baseline(std::size_t budget = 100);

  // "incompatible-scheme" when the sampler cannot feed the representation.
  void validate() const;
  std::string describe() const;
};

nlohmann::json to_json(const SamplerSpec& s);
SamplerSpec sampler_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SchemeSpec& s);
SchemeSpec scheme_from_json(const nlohmann::json& j);

// Per-victim state shared by every suspect scored against that victim.
struct VictimContext {
  const Classifier* victim = nullptr;
  QuerySet queries;
  Fingerprint fingerprint;
  std::vector<double> pool_distances;
  std::optional<double> threshold;
  // AKH replays its own draw per suspect.
  LabeledDataset seed_set;
  std::uint64_t seed = 0;
};

struct SchemeScore {
  double distance = 0.0;    // raw fingerprint distance (1 - match for AKH)
  double score = 0.0;       // detector output, lower = more suspicious
  std::optional<bool> flag; // when the detector has a decision rule
};

class FingerprintingScheme {
 public:
  explicit FingerprintingScheme(SchemeSpec spec);

  const SchemeSpec& spec() const { return spec_; }

  VictimContext prepare(const Classifier& victim, const LabeledDataset& seed_set,
                        std::span<const ClassifierPtr> calibration_models, std::uint64_t seed) const;
  SchemeScore score(const VictimContext& ctx, const Classifier& suspect) const;

  SchemeScore operator()(const Classifier& victim, const Classifier& suspect, const LabeledDataset& seed_set,
                         std::span<const ClassifierPtr> calibration_models, std::uint64_t seed) const;

 private:
  SchemeSpec spec_;
};

FingerprintingScheme assemble_scheme(const SchemeSpec& spec);

// Cartesian product of the built-in samplers (uniform, negative,
// adversarial, subsample, negative->adversarial, negative->subsample),
// representations (raw labels, raw probits, pairwise, listwise) and
// detectors (direct, calibrated), keeping only compatible triples.
std::vector<SchemeSpec> enumerate_schemes(std::size_t budget = 100);

}  // namespace mfp
