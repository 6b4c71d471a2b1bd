#include "mfp/roc.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "mfp/error.hpp"

namespace mfp {

namespace {

void require_pairs(std::span<const VictimScores> scores) {
  if (scores.empty()) throw Error("empty-pair-set", "no victims");
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (scores[v].positive.empty() || scores[v].negative.empty()) {
      throw Error("empty-pair-set", "victim " + std::to_string(v) + " lacks positive or negative pairs");
    }
  }
}

// Mean over victims of flagged[v] / total[v]. Shared by the direct and the
// sweep routes so both produce bit-identical rates.
double victim_average(const std::vector<std::size_t>& flagged, const std::vector<std::size_t>& total) {
  double sum = 0.0;
  for (std::size_t v = 0; v < flagged.size(); ++v) {
    sum += static_cast<double>(flagged[v]) / static_cast<double>(total[v]);
  }
  return sum / static_cast<double>(flagged.size());
}

}  // namespace

std::pair<double, double> tpr_fpr_at_threshold(std::span<const VictimScores> scores, double threshold) {
  require_pairs(scores);
  std::vector<std::size_t> tp(scores.size()), fp(scores.size()), np(scores.size()), nn(scores.size());
  for (std::size_t v = 0; v < scores.size(); ++v) {
    tp[v] = static_cast<std::size_t>(
        std::count_if(scores[v].positive.begin(), scores[v].positive.end(), [&](double s) { return s >= threshold; }));
    fp[v] = static_cast<std::size_t>(
        std::count_if(scores[v].negative.begin(), scores[v].negative.end(), [&](double s) { return s >= threshold; }));
    np[v] = scores[v].positive.size();
    nn[v] = scores[v].negative.size();
  }
  return {victim_average(tp, np), victim_average(fp, nn)};
}

std::pair<double, double> pooled_tpr_fpr_at_threshold(std::span<const VictimScores> scores, double threshold) {
  require_pairs(scores);
  std::size_t tp = 0, fp = 0, np = 0, nn = 0;
  for (const auto& v : scores) {
    for (double s : v.positive) tp += s >= threshold;
    for (double s : v.negative) fp += s >= threshold;
    np += v.positive.size();
    nn += v.negative.size();
  }
  return {static_cast<double>(tp) / static_cast<double>(np), static_cast<double>(fp) / static_cast<double>(nn)};
}

RocCurve roc_curve(std::span<const VictimScores> scores) {
  require_pairs(scores);
  struct Entry {
    double score;
    std::size_t victim;
    bool positive;
  };
  std::vector<Entry> entries;
  std::vector<std::size_t> np(scores.size()), nn(scores.size());
  for (std::size_t v = 0; v < scores.size(); ++v) {
    for (double s : scores[v].positive) entries.push_back({s, v, true});
    for (double s : scores[v].negative) entries.push_back({s, v, false});
    np[v] = scores[v].positive.size();
    nn[v] = scores[v].negative.size();
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.score > b.score; });

  std::vector<std::size_t> tp(scores.size(), 0), fp(scores.size(), 0);
  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (std::size_t i = 0; i < entries.size();) {
    const double t = entries[i].score;
    for (; i < entries.size() && entries[i].score == t; ++i) {
      (entries[i].positive ? tp : fp)[entries[i].victim] += 1;
    }
    curve.points.push_back({t, victim_average(fp, nn), victim_average(tp, np)});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double fpr_cap) {
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.fpr <= fpr_cap) best = std::max(best, p.tpr);
  }
  return best;
}

}  // namespace mfp
