#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "mfp/distances.hpp"
#include "mfp/error.hpp"
#include "mfp/mlp.hpp"
#include "mfp/random.hpp"

using namespace mfp;

namespace {

Mlp random_net(Activation act, std::uint64_t seed) {
  return Mlp::initialize(MlpSpec{{4, 8, 6, 3}, act, seed});
}

// Central differences of logit c.
Vector fd_gradient(const Mlp& m, Vector x, std::size_t c, double step) {
  Vector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double keep = x[j];
    x[j] = keep + step;
    const double up = m.logits(x)[c];
    x[j] = keep - step;
    const double down = m.logits(x)[c];
    x[j] = keep;
    g[j] = (up - down) / (2 * step);
  }
  return g;
}

void check_gradients(Activation act) {
  const Mlp m = random_net(act, 5);
  const MlpClassifier h("h", m);
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    Vector x(4);
    for (double& v : x) v = rng.uniform(-2, 2);
    for (int c = 0; c < 3; ++c) {
      const auto g = h.input_gradient(x, c);
      const auto fd = fd_gradient(m, x, static_cast<std::size_t>(c), 1e-4);
      for (std::size_t j = 0; j < 4; ++j) worst = std::max(worst, std::abs(g[j] - fd[j]));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

}  // namespace

TEST(Mlp, GradientMatchesFiniteDifferencesTanh) { check_gradients(Activation::Tanh); }

TEST(Mlp, GradientMatchesFiniteDifferencesRelu) { check_gradients(Activation::Relu); }

TEST(Mlp, ZeroWeightNetworkHasZeroGradient) {
  Mlp m = random_net(Activation::Tanh, 1);
  for (auto& layer : m.layers()) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
  }
  const MlpClassifier h("z", m);
  const auto g = h.input_gradient(std::vector<double>{0.3, -1.0, 2.0, 0.5}, 1);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, LinearModelGradientIsWeightRow) {
  auto h = make_linear_classifier("lin", {{0.5, -1.5, 2.0}, {3.0, 0.25, -0.75}}, {0.1, -0.2});
  const auto g = h->input_gradient(std::vector<double>{9.0, -3.0, 0.5}, 1);
  EXPECT_EQ(g, (Vector{3.0, 0.25, -0.75}));
}

TEST(Mlp, SoftmaxIsPositiveAndNormalized) {
  const Mlp m = random_net(Activation::Relu, 2);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Vector x(4);
    for (double& v : x) v = rng.uniform(-50, 50);
    const auto p = m.probits(x);
    double s = 0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  const auto extreme = softmax(std::vector<double>{1000.0, -1000.0, 0.0});
  EXPECT_NEAR(extreme[0], 1.0, 1e-12);
}

TEST(Mlp, ZeroLearningRateKeepsInitialWeights) {
  const auto data = generate_task(mfp::testing::small_task(1)).train;
  const auto arch = mfp::testing::small_arch(2, 3, 42);
  TrainConfig cfg = mfp::testing::quick_train(3);
  cfg.learning_rate = 0.0;
  EXPECT_EQ(train_mlp(data, arch, cfg).model, Mlp::initialize(arch));
}

TEST(Mlp, TrainingIsBitReproducible) {
  const auto data = generate_task(mfp::testing::small_task(2)).train;
  const auto arch = mfp::testing::small_arch(2, 3, 9);
  const auto a = train_mlp(data, arch, mfp::testing::quick_train(5));
  const auto b = train_mlp(data, arch, mfp::testing::quick_train(5));
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
}

TEST(Mlp, FinalLossNotAboveFirst) {
  const auto data = generate_task(mfp::testing::small_task(3)).train;
  const auto r = train_mlp(data, mfp::testing::small_arch(2, 3, 1), TrainConfig{});
  ASSERT_EQ(r.epoch_losses.size(), static_cast<std::size_t>(TrainConfig{}.epochs));
  EXPECT_LE(r.epoch_losses.back(), r.epoch_losses.front() + 1e-6);
}

TEST(Mlp, BlobsReachHighTestAccuracy) {
  SyntheticTaskSpec spec;  // blobs, 3 classes, 2-D, 10% label noise
  spec.spread = 0.7;
  spec.seed = 4;
  const auto data = generate_task(spec);
  TrainConfig cfg;
  cfg.epochs = 50;
  const auto h = train(data.train, MlpSpec{{2, 16, 3}, Activation::Relu, 4}, cfg);
  EXPECT_GT(accuracy(*h, data.test), 0.9);
}

TEST(Mlp, DivergenceIsReported) {
  const auto data = generate_task(mfp::testing::small_task(5)).train;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1e300;
  try {
    train_mlp(data, mfp::testing::small_arch(2, 3, 1), cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "training-diverged");
  }
}

TEST(Mlp, SpecValidation) {
  EXPECT_THROW(MlpSpec({{2, 3}, Activation::Relu, 0}).validate(), Error);
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), Error);
  const auto data = generate_task(mfp::testing::small_task(5)).train;
  EXPECT_THROW(train_mlp(data, MlpSpec{{3, 4, 3}, Activation::Relu, 0}, TrainConfig{}), Error);
}

TEST(Mlp, WeightFileRoundTrip) {
  const Mlp m = random_net(Activation::Tanh, 8);
  std::stringstream ss;
  save_mlp(m, ss);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "MFPW");
  // header: magic, version, count, 4 widths, activation; then 8*(4*8+8+8*6+6+6*3+3) bytes
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 4 * 4 + 4 + 8u * (32 + 8 + 48 + 6 + 18 + 3));
  std::stringstream in(bytes);
  EXPECT_EQ(load_mlp(in), m);
}

TEST(Mlp, CorruptWeightFiles) {
  const Mlp m = random_net(Activation::Relu, 8);
  std::stringstream ss;
  save_mlp(m, ss);
  std::string bytes = ss.str();
  for (const std::string& broken : {bytes.substr(0, bytes.size() - 3), std::string("XXXX") + bytes.substr(4),
                                    bytes.substr(0, 10)}) {
    std::stringstream in(broken);
    try {
      load_mlp(in);
      FAIL() << "expected corrupt-weights";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "corrupt-weights");
    }
  }
}
