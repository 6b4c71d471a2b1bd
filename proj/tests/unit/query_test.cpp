#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "mfp/error.hpp"
#include "mfp/query.hpp"

using namespace mfp;
using mfp::testing::trained_model;

namespace {

std::set<Vector> as_set(const std::vector<Vector>& v) { return {v.begin(), v.end()}; }

bool contains(const std::set<Vector>& s, const Vector& x) { return s.count(x) > 0; }

}  // namespace

TEST(UniformSampler, FullBudgetIsAPermutation) {
  const auto& t = trained_model(1);
  const auto q = uniform_sampler(t.data.test, t.data.test.size(), 3);
  auto a = q.points, b = t.data.test.points;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_FALSE(q.has_pairing());
}

TEST(UniformSampler, DeterministicAndBudgetChecked) {
  const auto& t = trained_model(1);
  const auto a = uniform_sampler(t.data.test, 50, 9), b = uniform_sampler(t.data.test, 50, 9);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.provenance, b.provenance);
  EXPECT_NE(a.points, uniform_sampler(t.data.test, 50, 10).points);
  try {
    uniform_sampler(t.data.test, t.data.test.size() + 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "budget-exceeds-pool");
  }
}

TEST(UniformSampler, ClassHistogramMatchesPool) {
  SyntheticTaskSpec spec;
  spec.num_classes = 4;
  spec.n_test = 1000;
  const auto pool = generate_task(spec).test;
  std::vector<double> p(4, 0.0);
  for (int l : pool.labels) p[l] += 1.0 / 1000;
  std::vector<double> counts(4, 0.0);
  const int seeds = 50, s = 100;
  for (int seed = 0; seed < seeds; ++seed) {
    for (int l : uniform_sampler(pool, s, seed).labels) counts[l] += 1;
  }
  const double n = seeds * s;
  for (int c = 0; c < 4; ++c) {
    EXPECT_NEAR(counts[c], n * p[c], 3 * std::sqrt(n * p[c] * (1 - p[c]))) << "class " << c;
  }
}

TEST(NegativeSampler, ReturnsOnlyMisclassifiedPoints) {
  const auto& t = trained_model(2);
  const auto q = negative_sampler(t.data.test, *t.model, 20, 4);
  ASSERT_EQ(q.size(), 20u);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NE(t.model->label(q.points[i]), q.labels[i]);
  const auto pool = as_set(t.data.test.points);
  for (const auto& x : q.points) EXPECT_TRUE(contains(pool, x));
}

TEST(NegativeSampler, PerfectModelHasNoNegatives) {
  const auto& t = trained_model(2);
  const auto c = t.data.test.concept_model();
  try {
    negative_sampler(t.data.test, *c, 1, 0);
    FAIL();
  } catch (const InsufficientNegatives& e) {
    EXPECT_EQ(e.code(), "insufficient-negatives");
    EXPECT_EQ(e.available(), 0u);
  }
}

TEST(NegativeSampler, AvailableCountMatchesEnumeration) {
  // 1000 points, the model errs on exactly every tenth one (alpha = 0.9).
  std::vector<int> truth(1000), pred(1000);
  for (int i = 0; i < 1000; ++i) {
    truth[i] = i % 3;
    pred[i] = i % 10 == 0 ? (truth[i] + 1) % 3 : truth[i];
  }
  const auto data = index_dataset(truth, 3);
  const TableClassifier h("h", pred, 3);
  try {
    negative_sampler(data, h, 101, 0);
    FAIL();
  } catch (const InsufficientNegatives& e) {
    EXPECT_EQ(e.available(), 100u);
    EXPECT_EQ(e.requested(), 101u);
  }
  const auto all = negative_sampler(data, h, 100, 0);
  std::set<double> got;
  for (const auto& x : all.points) got.insert(x[0]);
  std::set<double> expected;
  for (int i = 0; i < 1000; i += 10) expected.insert(i);
  EXPECT_EQ(got, expected);
}

TEST(AdversarialSampler, ZeroEpsilonReturnsSeeds) {
  const auto& t = trained_model(3);
  AdversarialParams p;
  p.epsilon = 0.0;
  p.step_size = 0.1;
  const auto q = adversarial_sampler(t.data.test, *t.model, p, 20, 1);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(q.points[i], q.points[i + 10]);
}

TEST(AdversarialSampler, StaysInsideTheBallWithPairing) {
  const auto& t = trained_model(3);
  AdversarialParams p;
  p.epsilon = 0.3;
  const auto q = adversarial_sampler(t.data.test, *t.model, p, 40, 2);
  ASSERT_EQ(q.size(), 40u);
  ASSERT_EQ(q.pairing.size(), 20u);
  const auto pool = as_set(t.data.test.points);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(q.pairing[i], std::make_pair(i, i + 20));
    EXPECT_TRUE(contains(pool, q.points[i]));
    for (std::size_t j = 0; j < 2; ++j) EXPECT_LE(std::fabs(q.points[i + 20][j] - q.points[i][j]), 0.3 + 1e-12);
  }
  // The attack moves most points and flips some labels.
  int flips = 0;
  for (std::size_t i = 0; i < 20; ++i) flips += t.model->label(q.points[i]) != t.model->label(q.points[i + 20]);
  EXPECT_GT(flips, 0);
}

TEST(AdversarialSampler, LinearModelFlipsExactlyBeyondTheMargin) {
  // Binary linear model; class 1 wins iff dw . x + db > 0 with dw = w1 - w0.
  const Vector w0 = {0.5, -1.0}, w1 = {-1.0, 1.5};
  const double b0 = 0.2, b1 = -0.1;
  auto h = make_linear_classifier("lin", {w0, w1}, {b0, b1});
  const Vector x = {1.0, 0.4};
  const double score = (w1[0] - w0[0]) * x[0] + (w1[1] - w0[1]) * x[1] + (b1 - b0);
  const double l1 = std::fabs(w1[0] - w0[0]) + std::fabs(w1[1] - w0[1]);
  // Smallest l-inf perturbation reaching the boundary.
  const double margin = std::fabs(score) / l1;
  LabeledDataset pool{2, 2, {x}, {h->label(x)}, {Split::Test}};
  for (double factor : {0.9, 1.1}) {
    AdversarialParams p;
    p.epsilon = factor * margin;
    p.steps = 40;
    const auto q = adversarial_sampler(pool, *h, p, 2, 0);
    const bool flipped = h->label(q.points[1]) != h->label(x);
    EXPECT_EQ(flipped, factor > 1.0) << "epsilon factor " << factor;
  }
}

TEST(AdversarialSampler, RequiresGradientsAndEvenBudget) {
  const auto& t = trained_model(3);
  const TableClassifier table("t", {0, 1}, 2);
  const auto data = index_dataset({0, 1}, 2);
  try {
    adversarial_sampler(data, table, {}, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "gradient-required");
  }
  EXPECT_THROW(adversarial_sampler(t.data.test, *t.model, {}, 3, 0), Error);
}

TEST(Subsampler, CountsAndPairing) {
  const auto& t = trained_model(4);
  const auto q = subsampler(t.data.test, 9, 0.7, 100, 5);
  EXPECT_EQ(q.size(), 100u);
  EXPECT_EQ(q.pairing.size(), 90u);
  const auto pool = as_set(t.data.test.points);
  for (const auto& [seed_i, var_i] : q.pairing) {
    ASSERT_LT(seed_i, 10u);
    EXPECT_TRUE(contains(pool, q.points[seed_i]));
    for (std::size_t j = 0; j < 2; ++j) {
      const double v = q.points[var_i][j];
      EXPECT_TRUE(v == 0.0 || v == q.points[seed_i][j]);
    }
  }
  try {
    subsampler(t.data.test, 9, 0.7, 95, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "budget-shape-mismatch");
  }
}

TEST(Subsampler, DegenerateSettings) {
  const auto& t = trained_model(4);
  const auto seeds_only = subsampler(t.data.test, 0, 0.5, 12, 1);
  EXPECT_EQ(seeds_only.points, uniform_sampler(t.data.test, 12, 1).points);
  EXPECT_FALSE(seeds_only.has_pairing());
  const auto unmasked = subsampler(t.data.test, 3, 1.0, 20, 1);
  for (const auto& [a, b] : unmasked.pairing) EXPECT_EQ(unmasked.points[a], unmasked.points[b]);
}

TEST(ChainSampler, NegativeThenAdversarialSeedsAreMistakes) {
  const auto& t = trained_model(5);
  const auto spec = chain_sampler(SamplerSpec::negative(), SamplerSpec::adversarial_with());
  EXPECT_TRUE(spec.produces_pairing());
  EXPECT_EQ(spec.seeds_needed(40), 20u);
  const auto q = run_sampler(spec, t.data.test, *t.model, 40, 8);
  ASSERT_EQ(q.size(), 40u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NE(t.model->label(q.points[i]), q.labels[i]);
  EXPECT_NE(q.provenance.find("negative"), std::string::npos);
  EXPECT_NE(q.provenance.find("adversarial"), std::string::npos);
}

TEST(ChainSampler, UniformThenUniformIsUniform) {
  const auto& t = trained_model(5);
  const auto spec = chain_sampler(SamplerSpec::uniform(), SamplerSpec::uniform());
  const auto q = run_sampler(spec, t.data.test, *t.model, t.data.test.size(), 2);
  EXPECT_EQ(as_set(q.points), as_set(t.data.test.points));
  const auto small = run_sampler(spec, t.data.test, *t.model, 30, 2);
  EXPECT_EQ(as_set(small.points).size(), 30u);
}

TEST(ChainSampler, NegativeCannotFollowGeneration) {
  try {
    chain_sampler(SamplerSpec::adversarial_with(), SamplerSpec::negative()).validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "incompatible-chain");
  }
}

TEST(QuerySet, AutomaticEpsilonUsesDataRange) {
  const std::vector<Vector> pts = {{0.0, 10.0}, {2.0, 14.0}, {1.0, 12.0}};
  EXPECT_DOUBLE_EQ(mean_dimension_range(pts), 3.0);
}
