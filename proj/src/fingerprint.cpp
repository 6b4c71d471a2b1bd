#include "mfp/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "mfp/error.hpp"

namespace mfp {

const char* to_string(RepresentationKind k) {
  switch (k) {
    case RepresentationKind::RawLabels: return "raw_labels";
    case RepresentationKind::RawProbits: return "raw_probits";
    case RepresentationKind::Pairwise: return "pairwise";
    case RepresentationKind::Listwise: return "listwise";
  }
  return "raw_labels";
}

RepresentationKind representation_from_string(std::string_view s) {
  for (auto k : {RepresentationKind::RawLabels, RepresentationKind::RawProbits, RepresentationKind::Pairwise,
                 RepresentationKind::Listwise}) {
    if (s == to_string(k)) return k;
  }
  throw Error("bad-representation", std::string(s));
}

const char* to_string(InnerDistance d) { return d == InnerDistance::Cosine ? "cosine" : "label_disagreement"; }

InnerDistance inner_distance_from_string(std::string_view s) {
  if (s == "cosine") return InnerDistance::Cosine;
  if (s == "label_disagreement") return InnerDistance::LabelDisagreement;
  throw Error("bad-representation", "unknown inner distance '" + std::string(s) + "'");
}

bool needs_probits(RepresentationKind kind, InnerDistance inner) {
  switch (kind) {
    case RepresentationKind::RawLabels: return false;
    case RepresentationKind::RawProbits: return true;
    default: return inner == InnerDistance::Cosine;
  }
}

Answers collect_answers(const Classifier& h, const QuerySet& queries, bool with_probits) {
  Answers a;
  a.labels.reserve(queries.size());
  if (with_probits) a.probits.reserve(queries.size());
  for (const auto& x : queries.points) {
    if (with_probits) {
      a.probits.push_back(h.probits(x));
      a.labels.push_back(h.label(x));
    } else {
      a.labels.push_back(h.label(x));
    }
  }
  return a;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("incomparable-fingerprints", "cosine of vectors of different length");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return 1.0 - cos;
}

namespace {

double answer_distance(const Answers& a, std::size_t i, std::size_t j, InnerDistance inner) {
  if (inner == InnerDistance::LabelDisagreement) return a.labels[i] != a.labels[j] ? 1.0 : 0.0;
  return cosine_distance(a.probits[i], a.probits[j]);
}

}  // namespace

Fingerprint represent(const Answers& answers, const QuerySet& queries, RepresentationKind kind,
                      InnerDistance inner) {
  const std::size_t s = queries.size();
  if (answers.labels.size() != s) throw Error("bad-answers", "answer count does not match query set");
  if (needs_probits(kind, inner) && answers.probits.size() != s) {
    throw Error("access-insufficient", std::string(to_string(kind)) + " representation needs probit answers");
  }
  Fingerprint fp;
  fp.kind = kind;
  fp.provenance = queries.provenance;
  switch (kind) {
    case RepresentationKind::RawLabels:
      fp.rows = s;
      fp.cols = 1;
      fp.payload.assign(answers.labels.begin(), answers.labels.end());
      break;
    case RepresentationKind::RawProbits:
      fp.rows = s;
      fp.cols = s == 0 ? 0 : answers.probits.front().size();
      for (const auto& p : answers.probits) fp.payload.insert(fp.payload.end(), p.begin(), p.end());
      break;
    case RepresentationKind::Pairwise:
      if (!queries.has_pairing()) throw Error("pairing-required", "pairwise representation needs a paired query set");
      fp.rows = queries.pairing.size();
      fp.cols = 1;
      for (const auto& [i, j] : queries.pairing) fp.payload.push_back(answer_distance(answers, i, j, inner));
      break;
    case RepresentationKind::Listwise:
      fp.rows = s;
      fp.cols = s;
      fp.payload.assign(s * s, 0.0);
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = i + 1; j < s; ++j) {
          const double d = answer_distance(answers, i, j, inner);
          fp.payload[i * s + j] = d;
          fp.payload[j * s + i] = d;
        }
      }
      break;
  }
  return fp;
}

Fingerprint fingerprint_model(const Classifier& h, const QuerySet& queries, RepresentationKind kind,
                              InnerDistance inner) {
  return represent(collect_answers(h, queries, needs_probits(kind, inner)), queries, kind, inner);
}

double fingerprint_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.kind != b.kind) throw Error("incomparable-fingerprints", "different representation kinds");
  if (a.provenance != b.provenance) throw Error("incomparable-fingerprints", "different query sets");
  if (a.rows != b.rows || a.cols != b.cols) throw Error("incomparable-fingerprints", "different shapes");
  if (a.rows == 0) throw Error("incomparable-fingerprints", "empty fingerprints");
  switch (a.kind) {
    case RepresentationKind::RawLabels: {
      std::size_t differ = 0;
      for (std::size_t i = 0; i < a.payload.size(); ++i) differ += a.payload[i] != b.payload[i];
      return static_cast<double>(differ) / static_cast<double>(a.rows);
    }
    case RepresentationKind::RawProbits: {
      double total = 0.0;
      for (std::size_t r = 0; r < a.rows; ++r) {
        total += cosine_distance(std::span(a.payload).subspan(r * a.cols, a.cols),
                                 std::span(b.payload).subspan(r * b.cols, b.cols));
      }
      return total / static_cast<double>(a.rows);
    }
    default:
      return cosine_distance(a.payload, b.payload);
  }
}

void CalibrationPool::validate() const {
  if (fingerprints.empty()) throw Error("empty-calibration-pool");
  for (const auto& fp : fingerprints) {
    if (fp.kind != fingerprints.front().kind || fp.provenance != fingerprints.front().provenance) {
      throw Error("incomparable-fingerprints", "calibration pool is not homogeneous");
    }
  }
}

double calibrate_threshold(const Fingerprint& victim, const CalibrationPool& pool, double target_fpr) {
  pool.validate();
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) throw Error("bad-fpr", "target_fpr must be in [0,1]");
  std::vector<double> d;
  d.reserve(pool.fingerprints.size());
  for (const auto& fp : pool.fingerprints) d.push_back(fingerprint_distance(victim, fp));
  std::sort(d.begin(), d.end());
  const auto allowed = static_cast<std::size_t>(std::floor(target_fpr * static_cast<double>(d.size()) + 1e-12));
  if (allowed >= d.size()) return std::nextafter(d.back(), std::numeric_limits<double>::infinity());
  return d[allowed];
}

double calibrated_score(double distance, const std::vector<double>& pool_distances) {
  if (pool_distances.empty()) throw Error("empty-calibration-pool", "no pool distances");
  std::vector<double> q = pool_distances;
  std::sort(q.begin(), q.end());
  const double step = 1.0 / static_cast<double>(q.size() + 1);
  if (distance < q.front()) return step * distance / q.front();
  if (distance >= q.back()) {
    const double base = step * static_cast<double>(q.size());
    return distance == q.back() || distance <= 0.0 ? base : 1.0 - step * q.back() / distance;
  }
  // q[i] <= distance < q[i + 1] with q[i] < q[i + 1].
  const auto hi = static_cast<std::size_t>(std::upper_bound(q.begin(), q.end(), distance) - q.begin());
  const double at = step * static_cast<double>(hi);
  if (distance == q[hi - 1]) return at;
  return at + step * (distance - q[hi - 1]) / (q[hi] - q[hi - 1]);
}

void write_fingerprint(const Fingerprint& fp, std::ostream& out) {
  const nlohmann::json header = {{"format", "mfp-fingerprint"},
                                 {"version", 1},
                                 {"kind", to_string(fp.kind)},
                                 {"rows", fp.rows},
                                 {"cols", fp.cols},
                                 {"provenance", fp.provenance},
                                 {"dtype", "f64le"}};
  out << header.dump() << '\n';
  for (double v : fp.payload) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(b, 8);
  }
  if (!out) throw Error("io-error", "failed writing fingerprint");
}

void write_fingerprint(const Fingerprint& fp, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  write_fingerprint(fp, out);
}

Fingerprint read_fingerprint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("corrupt-fingerprint", "missing header");
  Fingerprint fp;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format") != "mfp-fingerprint") throw Error("corrupt-fingerprint", "bad format tag");
    fp.kind = representation_from_string(header.at("kind").get<std::string>());
    fp.rows = header.at("rows").get<std::size_t>();
    fp.cols = header.at("cols").get<std::size_t>();
    fp.provenance = header.at("provenance").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt-fingerprint", e.what());
  }
  fp.payload.resize(fp.rows * fp.cols);
  for (double& v : fp.payload) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("corrupt-fingerprint", "truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return fp;
}

Fingerprint read_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot read " + path.string());
  return read_fingerprint(in);
}

}  // namespace mfp
