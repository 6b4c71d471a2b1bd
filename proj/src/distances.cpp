#include "mfp/distances.hpp"

#include "mfp/error.hpp"

namespace mfp {

namespace {
void require_nonempty(const LabeledDataset& data) {
  if (data.empty()) throw Error("empty-evaluation-set");
}
}  // namespace

std::vector<int> predict_labels(const Classifier& h, const std::vector<Vector>& points) {
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(h.label(x));
  return out;
}

double accuracy(const Classifier& h, const LabeledDataset& data) {
  require_nonempty(data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += h.label(data.points[i]) == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double hamming_distance(const Classifier& h, const Classifier& g, const LabeledDataset& data) {
  require_nonempty(data);
  std::size_t differ = 0;
  for (const auto& x : data.points) differ += h.label(x) != g.label(x);
  return static_cast<double>(differ) / static_cast<double>(data.size());
}

std::optional<double> conditioned_hamming(const Classifier& h, const Classifier& g,
                                          const LabeledDataset& data) {
  require_nonempty(data);
  std::size_t errors = 0;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int hl = h.label(data.points[i]);
    if (hl == data.labels[i]) continue;
    ++errors;
    differ += g.label(data.points[i]) != hl;
  }
  if (errors == 0) return std::nullopt;
  return static_cast<double>(differ) / static_cast<double>(errors);
}

double PairStats::conditioned_lower_bound() const {
  if (alpha >= 1.0) throw Error("undefined-conditioning", "bound needs alpha < 1");
  return (delta - (1.0 - alpha_prime)) / (1.0 - alpha);
}

PairStats pair_stats_from_labels(const std::vector<int>& h, const std::vector<int>& g,
                                 const std::vector<int>& truth) {
  if (truth.empty()) throw Error("empty-evaluation-set");
  if (h.size() != truth.size() || g.size() != truth.size()) {
    throw Error("bad-dataset", "label vectors differ in length");
  }
  std::size_t h_ok = 0, g_ok = 0, differ = 0, h_err = 0, differ_on_err = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    h_ok += h[i] == truth[i];
    g_ok += g[i] == truth[i];
    differ += h[i] != g[i];
    if (h[i] != truth[i]) {
      ++h_err;
      differ_on_err += h[i] != g[i];
    }
  }
  const auto n = static_cast<double>(truth.size());
  PairStats s;
  s.n_eval = truth.size();
  s.alpha = static_cast<double>(h_ok) / n;
  s.alpha_prime = static_cast<double>(g_ok) / n;
  s.delta = static_cast<double>(differ) / n;
  if (h_err > 0) s.delta_c = static_cast<double>(differ_on_err) / static_cast<double>(h_err);
  return s;
}

PairStats pair_stats(const Classifier& h, const Classifier& g, const LabeledDataset& data) {
  require_nonempty(data);
  return pair_stats_from_labels(predict_labels(h, data.points), predict_labels(g, data.points),
                                data.labels);
}

}  // namespace mfp
