#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mfp/error.hpp"
#include "mfp/random.hpp"
#include "mfp/roc.hpp"

using namespace mfp;

namespace {

// Brute force: per-victim counts at one threshold.
std::pair<double, double> rates_by_counting(const std::vector<VictimScores>& v, double t) {
  double tpr = 0, fpr = 0;
  for (const auto& s : v) {
    double tp = 0, fp = 0;
    for (double x : s.positive) tp += x >= t;
    for (double x : s.negative) fp += x >= t;
    tpr += tp / s.positive.size();
    fpr += fp / s.negative.size();
  }
  return {tpr / v.size(), fpr / v.size()};
}

// Max TPR over thresholds on a fine grid plus every observed score.
double brute_tpr_at_fpr(const std::vector<VictimScores>& v, double cap) {
  std::set<double> thresholds = {std::numeric_limits<double>::infinity()};
  for (const auto& s : v) {
    thresholds.insert(s.positive.begin(), s.positive.end());
    thresholds.insert(s.negative.begin(), s.negative.end());
  }
  double best = 0;
  for (double t : thresholds) {
    const auto [tpr, fpr] = rates_by_counting(v, t);
    if (fpr <= cap) best = std::max(best, tpr);
  }
  return best;
}

std::vector<VictimScores> random_sets(Rng& rng, bool ties) {
  const std::size_t victims = 1 + rng.index(4);
  std::vector<VictimScores> v(victims);
  for (auto& s : v) {
    const std::size_t np = 1 + rng.index(6), nn = 1 + rng.index(25);
    const double shift = rng.uniform(0, 2);
    auto draw = [&](double mu) { return ties ? std::round(4 * (mu + rng.normal())) / 4 : mu + rng.normal(); };
    for (std::size_t i = 0; i < np; ++i) s.positive.push_back(draw(shift));
    for (std::size_t i = 0; i < nn; ++i) s.negative.push_back(draw(0));
  }
  return v;
}

}  // namespace

TEST(Rates, VictimAveragingDiffersFromPooling) {
  // Victim A: 4 of 4 positives flagged. Victim B: 0 of 1.
  const std::vector<VictimScores> v = {{{1, 1, 1, 1}, {0}}, {{0}, {0}}};
  const auto [tpr, fpr] = tpr_fpr_at_threshold(v, 0.5);
  EXPECT_DOUBLE_EQ(tpr, 0.5);
  EXPECT_DOUBLE_EQ(fpr, 0.0);
  EXPECT_DOUBLE_EQ(pooled_tpr_fpr_at_threshold(v, 0.5).first, 0.8);
}

TEST(Rates, FlagAllAndFlagNone) {
  const std::vector<VictimScores> v = {{{0.3, 0.9}, {0.1, 0.5, 0.7}}, {{-2}, {4}}};
  const auto all = tpr_fpr_at_threshold(v, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(all, std::make_pair(1.0, 1.0));
  const auto none = tpr_fpr_at_threshold(v, std::numeric_limits<double>::infinity());
  EXPECT_EQ(none, std::make_pair(0.0, 0.0));
}

TEST(Rates, EmptyPairSet) {
  const std::vector<VictimScores> v = {{{1}, {}}};
  try {
    tpr_fpr_at_threshold(v, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty-pair-set");
  }
  EXPECT_THROW(roc_curve(v), Error);
  EXPECT_THROW(roc_curve(std::vector<VictimScores>{}), Error);
}

TEST(RocCurve, MatchesDenseThresholdSweep) {
  Rng rng(8);
  const auto v = random_sets(rng, false);
  const auto curve = roc_curve(v);
  // Every grid threshold falls between two curve points; its rates equal the
  // point with the smallest threshold at or above it.
  for (int i = 0; i <= 10000; ++i) {
    const double t = -5.0 + 10.0 * i / 10000;
    const auto expected = rates_by_counting(v, t);
    const RocPoint* match = &curve.points.front();
    for (const auto& p : curve.points) {
      if (p.threshold >= t) match = &p;
    }
    EXPECT_NEAR(match->tpr, expected.first, 1e-12);
    EXPECT_NEAR(match->fpr, expected.second, 1e-12);
  }
  for (const auto& p : curve.points) {
    const auto [tpr, fpr] = tpr_fpr_at_threshold(v, p.threshold);
    EXPECT_EQ(p.tpr, tpr);
    EXPECT_EQ(p.fpr, fpr);
  }
}

TEST(RocCurve, MonotoneFromOriginToOne) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto curve = roc_curve(random_sets(rng, trial % 2 == 0));
    ASSERT_FALSE(curve.points.empty());
    EXPECT_TRUE(std::isinf(curve.points.front().threshold));
    EXPECT_EQ(curve.points.front().tpr, 0.0);
    EXPECT_EQ(curve.points.front().fpr, 0.0);
    EXPECT_NEAR(curve.points.back().tpr, 1.0, 1e-12);
    EXPECT_NEAR(curve.points.back().fpr, 1.0, 1e-12);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_LT(curve.points[i].threshold, curve.points[i - 1].threshold);
      EXPECT_GE(curve.points[i].tpr, curve.points[i - 1].tpr);
      EXPECT_GE(curve.points[i].fpr, curve.points[i - 1].fpr);
    }
    EXPECT_GE(curve.auc, 0.0);
    EXPECT_LE(curve.auc, 1.0);
  }
}

TEST(TprAtFpr, PerfectAndDiagonal) {
  const std::vector<VictimScores> perfect = {{{5, 6, 7}, {0, 1, 2, 3}}};
  EXPECT_EQ(tpr_at_fpr(roc_curve(perfect)), 1.0);
  EXPECT_DOUBLE_EQ(roc_curve(perfect).auc, 1.0);

  // Positives and negatives interleave exactly: the curve is the diagonal.
  VictimScores diag;
  for (int i = 0; i < 100; ++i) {
    diag.positive.push_back(2 * i);
    diag.negative.push_back(2 * i + 1);
  }
  const auto curve = roc_curve(std::vector<VictimScores>{diag});
  EXPECT_NEAR(tpr_at_fpr(curve, 0.05), 0.05, 1e-12);
  EXPECT_NEAR(curve.auc, 0.5, 0.01);
}

TEST(TprAtFpr, AgreesWithBruteForceOnRandomSets) {
  Rng rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_sets(rng, trial % 3 == 0);
    for (double cap : {0.0, 0.05, 0.2}) {
      EXPECT_DOUBLE_EQ(tpr_at_fpr(roc_curve(v), cap), brute_tpr_at_fpr(v, cap)) << "trial " << trial;
    }
  }
}
