#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfp/classifier.hpp"
#include "mfp/query.hpp"

namespace mfp {

enum class RepresentationKind { RawLabels, RawProbits, Pairwise, Listwise };
// Distance between two answers inside a Pairwise/Listwise representation.
enum class InnerDistance { Cosine, LabelDisagreement };

const char* to_string(RepresentationKind k);
RepresentationKind representation_from_string(std::string_view s);
const char* to_string(InnerDistance d);
InnerDistance inner_distance_from_string(std::string_view s);

// Whether this representation reads probit vectors from the model.
bool needs_probits(RepresentationKind kind, InnerDistance inner);

// A model's answers on a query set.
struct Answers {
  std::vector<int> labels;
  std::vector<Vector> probits;  // empty unless requested
};

Answers collect_answers(const Classifier& h, const QuerySet& queries, bool with_probits);

// Z_h. Payload is row-major rows x cols:
//   RawLabels  s x 1   (labels stored as doubles)
//   RawProbits s x C
//   Pairwise   p x 1   (one entry per pairing couple; p = s/2 for adversarial sets)
//   Listwise   s x s
struct Fingerprint {
  RepresentationKind kind = RepresentationKind::RawLabels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> payload;
  std::string provenance;  // copy of the query set provenance

  double at(std::size_t r, std::size_t c) const { return payload[r * cols + c]; }
  bool operator==(const Fingerprint&) const = default;
};

// 1 - cos(a, b). Two zero vectors are at distance 0; one zero vector is at 1.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Errors: "pairing-required" (Pairwise without pairing), "access-insufficient"
// (probit representation from labels-only answers).
Fingerprint represent(const Answers& answers, const QuerySet& queries, RepresentationKind kind,
                      InnerDistance inner = InnerDistance::Cosine);

// Queries the model and builds its fingerprint in one step.
Fingerprint fingerprint_model(const Classifier& h, const QuerySet& queries, RepresentationKind kind,
                              InnerDistance inner = InnerDistance::Cosine);

// RawLabels: normalized Hamming. RawProbits: mean per-query cosine distance.
// Pairwise/Listwise: cosine distance of the flattened payloads.
// "incomparable-fingerprints" on kind, shape or provenance mismatch.
double fingerprint_distance(const Fingerprint& a, const Fingerprint& b);

struct CalibrationPool {
  std::vector<Fingerprint> fingerprints;  // from unrelated models, one query set

  void validate() const;
};

// Largest threshold t such that the fraction of pool distances strictly
// below t is <= target_fpr. Flag rule: distance < t means stolen.
double calibrate_threshold(const Fingerprint& victim, const CalibrationPool& pool, double target_fpr);

// Continuous empirical p-value of a distance against the pool. With sorted
// pool distances q_1 <= ... <= q_n the score is #{q <= d} / (n + 1) at every
// pool value and linear in between; below q_1 it falls linearly to 0 at
// d = 0, above q_n it approaches 1 as 1 - q_n / ((n + 1) d). Monotone in d, so
// it orders suspects of one victim like the raw distance while putting
// different victims on a common scale.
double calibrated_score(double distance, const std::vector<double>& pool_distances);

// One-line JSON header followed by the payload as little-endian float64.
void write_fingerprint(const Fingerprint& fp, std::ostream& out);
void write_fingerprint(const Fingerprint& fp, const std::filesystem::path& path);
Fingerprint read_fingerprint(std::istream& in);
Fingerprint read_fingerprint(const std::filesystem::path& path);

}  // namespace mfp
