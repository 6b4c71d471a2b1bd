#pragma once

#include <span>
#include <utility>
#include <vector>

namespace mfp {

// Suspicion scores (higher = more likely stolen) of one victim's positive
// pairs (h, h' in S(h)) and negative pairs (h, h' in U(h)).
struct VictimScores {
  std::vector<double> positive;
  std::vector<double> negative;
};

// Benchmark rates at a threshold, flag rule score >= threshold:
//   TPR = 1/|V| sum_h #{h' in S(h) flagged} / |S(h)|
//   FPR = 1/|V| sum_h #{h' in U(h) flagged} / |U(h)|
// Victims are weighted equally regardless of their pair counts.
// "empty-pair-set" when any victim has no positive or no negative pair.
std::pair<double, double> tpr_fpr_at_threshold(std::span<const VictimScores> scores, double threshold);

// The same rates pooled over all pairs, for comparison only.
std::pair<double, double> pooled_tpr_fpr_at_threshold(std::span<const VictimScores> scores, double threshold);

struct RocPoint {
  double threshold;  // +inf for the initial (0, 0) point
  double fpr;
  double tpr;
};

// Points for threshold = +inf followed by every distinct observed score in
// descending order, so fpr and tpr are non-decreasing and the curve ends at
// (1, 1).
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

RocCurve roc_curve(std::span<const VictimScores> scores);

// Largest TPR among curve points with FPR <= fpr_cap (0 if none).
double tpr_at_fpr(const RocCurve& curve, double fpr_cap = 0.05);

}  // namespace mfp
