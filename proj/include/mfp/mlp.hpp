#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"

namespace mfp {

enum class Activation { Relu = 0, Tanh = 1 };

const char* to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct MlpSpec {
  // Input dimension, hidden widths, number of classes.
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Loss { CrossEntropy, DistillationKl };

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  double weight_decay = 0.0;
  Loss loss = Loss::CrossEntropy;

  void validate() const;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  bool operator==(const DenseLayer&) const = default;
};

// Fully connected network; the activation applies to hidden layers, the last
// layer emits logits. A network with no hidden layer is a linear model.
class Mlp {
 public:
  Mlp() = default;
  Mlp(Activation activation, std::vector<DenseLayer> layers);

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static Mlp initialize(const MlpSpec& spec);

  Activation activation() const { return activation_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::vector<std::size_t> widths() const;
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t num_classes() const { return layers_.back().out; }
  std::size_t parameter_count() const;

  Vector logits(std::span<const double> x) const;
  Vector probits(std::span<const double> x) const;
  // Gradient of <upstream, logits(x)> with respect to x.
  Vector input_vjp(std::span<const double> x, std::span<const double> upstream) const;

  bool operator==(const Mlp&) const = default;

 private:
  Activation activation_ = Activation::Relu;
  std::vector<DenseLayer> layers_;
};

// Numerically stable softmax.
Vector softmax(std::span<const double> logits);

struct TrainResult {
  Mlp model;
  std::vector<double> epoch_losses;  // mean per-sample loss seen during each epoch
};

// Minibatch SGD with a fixed step size and seeded shuffling. `targets` are
// class distributions (one-hot for hard labels). Throws "training-diverged"
// on a non-finite loss.
TrainResult fit(Mlp model, const std::vector<Vector>& inputs, const std::vector<Vector>& targets,
                const TrainConfig& cfg, std::uint64_t shuffle_seed);

std::vector<Vector> one_hot(const std::vector<int>& labels, int num_classes);

// Trains a fresh network from arch.seed. Initialization and shuffling use
// independent streams derived from that seed.
TrainResult train_mlp(const LabeledDataset& data, const MlpSpec& arch, const TrainConfig& cfg);

class MlpClassifier final : public Classifier {
 public:
  MlpClassifier(std::string id, Mlp model, Provenance provenance = {});

  const Mlp& model() const { return model_; }

 protected:
  int compute_label(std::span<const double> x) const override;
  std::vector<int> compute_top_k(std::span<const double> x, int k) const override;
  Vector compute_probits(std::span<const double> x) const override;
  Vector compute_input_gradient(std::span<const double> x, int class_index) const override;

 private:
  Mlp model_;
};

ClassifierPtr train(const LabeledDataset& data, const MlpSpec& arch, const TrainConfig& cfg,
                    std::string id = "model");

// Throws "not-in-process" unless h is backed by an in-process network.
const MlpClassifier& require_mlp(const Classifier& h);

// Softmax regression with the given C x d weight matrix.
ClassifierPtr make_linear_classifier(std::string id, std::vector<Vector> weights, Vector bias);

// Binary weight file: "MFPW", u32 version, u32 #widths, u32 widths...,
// u32 activation, then per layer out*in weights and out biases as
// little-endian float64.
void save_mlp(const Mlp& model, std::ostream& out);
void save_mlp(const Mlp& model, const std::filesystem::path& path);
Mlp load_mlp(std::istream& in);
Mlp load_mlp(const std::filesystem::path& path);

}  // namespace mfp
