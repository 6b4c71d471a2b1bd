#include "mfp/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "mfp/error.hpp"
#include "mfp/random.hpp"

namespace mfp {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'P', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

struct Cache {
  std::vector<Vector> pre;  // pre-activation per layer
  std::vector<Vector> act;  // act[0] = input, act[l+1] = output of layer l
};

double activate(Activation a, double z) { return a == Activation::Relu ? (z > 0 ? z : 0.0) : std::tanh(z); }

double activate_grad(Activation a, double z, double out) {
  return a == Activation::Relu ? (z > 0 ? 1.0 : 0.0) : 1.0 - out * out;
}

void forward(const Mlp& net, std::span<const double> x, Cache& cache) {
  const auto& layers = net.layers();
  cache.pre.resize(layers.size());
  cache.act.resize(layers.size() + 1);
  cache.act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const Vector& in = cache.act[l];
    Vector& z = cache.pre[l];
    z.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = &layer.weights[o * layer.in];
      double sum = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) sum += w[i] * in[i];
      z[o] += sum;
    }
    Vector& a = cache.act[l + 1];
    if (l + 1 == layers.size()) {
      a = z;
    } else {
      a.resize(z.size());
      for (std::size_t o = 0; o < z.size(); ++o) a[o] = activate(net.activation(), z[o]);
    }
  }
}

// Backpropagates `delta` (gradient w.r.t. logits). Accumulates parameter
// gradients into `grads` when non-null; returns the gradient w.r.t. input.
Vector backward(const Mlp& net, const Cache& cache, Vector delta, std::vector<DenseLayer>* grads) {
  const auto& layers = net.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const Vector& in = cache.act[l];
    if (grads != nullptr) {
      DenseLayer& g = (*grads)[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* gw = &g.weights[o * layer.in];
        for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * in[i];
        g.bias[o] += d;
      }
    }
    Vector prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = &layer.weights[o * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += w[i] * d;
    }
    if (l > 0) {
      const Vector& z = cache.pre[l - 1];
      const Vector& a = cache.act[l];
      for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= activate_grad(net.activation(), z[i], a[i]);
    }
    delta = std::move(prev);
  }
  return delta;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffU);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffU);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("corrupt-weights", "truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("corrupt-weights", "truncated weights");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

const char* to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw Error("bad-activation", std::string(s));
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 3) throw Error("bad-architecture", "need input, >=1 hidden and output widths");
  for (auto w : layer_widths) {
    if (w == 0) throw Error("bad-architecture", "zero layer width");
  }
  if (layer_widths.back() < 2) throw Error("bad-architecture", "output width must be >= 2");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("bad-train-config", "epochs must be >= 1");
  if (batch_size < 1) throw Error("bad-train-config", "batch_size must be >= 1");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw Error("bad-train-config", "learning_rate");
  if (!(weight_decay >= 0)) throw Error("bad-train-config", "weight_decay must be >= 0");
}

Mlp::Mlp(Activation activation, std::vector<DenseLayer> layers)
    : activation_(activation), layers_(std::move(layers)) {
  if (layers_.empty()) throw Error("bad-architecture", "network has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      throw Error("bad-architecture", "layer " + std::to_string(l) + " parameter shape");
    }
    if (l > 0 && layers_[l - 1].out != layer.in) {
      throw Error("bad-architecture", "layer " + std::to_string(l) + " input width");
    }
  }
}

Mlp Mlp::initialize(const MlpSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {1}));
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    DenseLayer layer{spec.layer_widths[l], spec.layer_widths[l + 1], {}, {}};
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.weights.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    layers.push_back(std::move(layer));
  }
  return Mlp(spec.activation, std::move(layers));
}

std::vector<std::size_t> Mlp::widths() const {
  std::vector<std::size_t> w{layers_.front().in};
  for (const auto& layer : layers_) w.push_back(layer.out);
  return w;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

Vector Mlp::logits(std::span<const double> x) const {
  Cache cache;
  forward(*this, x, cache);
  return cache.act.back();
}

Vector Mlp::probits(std::span<const double> x) const { return softmax(logits(x)); }

Vector Mlp::input_vjp(std::span<const double> x, std::span<const double> upstream) const {
  Cache cache;
  forward(*this, x, cache);
  return backward(*this, cache, Vector(upstream.begin(), upstream.end()), nullptr);
}

Vector softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<Vector> one_hot(const std::vector<int>& labels, int num_classes) {
  std::vector<Vector> out(labels.size(), Vector(static_cast<std::size_t>(num_classes), 0.0));
  for (std::size_t i = 0; i < labels.size(); ++i) out[i].at(static_cast<std::size_t>(labels[i])) = 1.0;
  return out;
}

TrainResult fit(Mlp model, const std::vector<Vector>& inputs, const std::vector<Vector>& targets,
                const TrainConfig& cfg, std::uint64_t shuffle_seed) {
  cfg.validate();
  if (inputs.empty()) throw Error("empty-training-set");
  if (inputs.size() != targets.size()) throw Error("bad-dataset", "inputs/targets length mismatch");
  for (const auto& x : inputs) {
    if (x.size() != model.input_dim()) throw Error("incompatible-task", "input dimension does not match network");
  }
  for (const auto& t : targets) {
    if (t.size() != model.num_classes()) throw Error("incompatible-task", "target width does not match network");
  }

  Rng rng(shuffle_seed);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<DenseLayer> grads = model.layers();
  Cache cache;
  TrainResult result;
  result.epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        forward(model, inputs[i], cache);
        const Vector& z = cache.act.back();
        const Vector& t = targets[i];
        const double m = *std::max_element(z.begin(), z.end());
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        lse = m + std::log(lse);
        Vector delta(z.size());
        double loss = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) {
          const double log_q = z[c] - lse;
          delta[c] = std::exp(log_q) - t[c];
          if (t[c] > 0) {
            loss -= t[c] * log_q;
            if (cfg.loss == Loss::DistillationKl) loss += t[c] * std::log(t[c]);
          }
        }
        if (!std::isfinite(loss)) {
          throw Error("training-diverged", "non-finite loss at epoch " + std::to_string(epoch + 1));
        }
        epoch_loss += loss;
        backward(model, cache, std::move(delta), &grads);
      }
      const double scale = cfg.learning_rate / static_cast<double>(end - start);
      const double decay = cfg.learning_rate * cfg.weight_decay;
      auto& layers = model.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& w = layers[l].weights;
        const auto& gw = grads[l].weights;
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= scale * gw[j] + decay * w[j];
        auto& bias = layers[l].bias;
        const auto& gb = grads[l].bias;
        for (std::size_t j = 0; j < bias.size(); ++j) bias[j] -= scale * gb[j];
      }
    }
    epoch_loss /= static_cast<double>(inputs.size());
    if (!std::isfinite(epoch_loss)) throw Error("training-diverged", "non-finite epoch loss");
    result.epoch_losses.push_back(epoch_loss);
  }
  result.model = std::move(model);
  return result;
}

TrainResult train_mlp(const LabeledDataset& data, const MlpSpec& arch, const TrainConfig& cfg) {
  arch.validate();
  if (data.empty()) throw Error("empty-training-set");
  if (arch.layer_widths.front() != data.dim) {
    throw Error("incompatible-task", "architecture input " + std::to_string(arch.layer_widths.front()) +
                                         " vs data dimension " + std::to_string(data.dim));
  }
  if (static_cast<int>(arch.layer_widths.back()) != data.num_classes) {
    throw Error("incompatible-task", "architecture output width does not match num_classes");
  }
  return fit(Mlp::initialize(arch), data.points, one_hot(data.labels, data.num_classes), cfg,
             derive_seed(arch.seed, {2}));
}

MlpClassifier::MlpClassifier(std::string id, Mlp model, Provenance provenance)
    : Classifier({std::move(id), AccessLevel::gradients(), static_cast<int>(model.num_classes()),
                  model.input_dim(), std::move(provenance)}),
      model_(std::move(model)) {}

int MlpClassifier::compute_label(std::span<const double> x) const { return argmax(model_.logits(x)); }

std::vector<int> MlpClassifier::compute_top_k(std::span<const double> x, int k) const {
  return top_k_indices(model_.logits(x), k);
}

Vector MlpClassifier::compute_probits(std::span<const double> x) const { return model_.probits(x); }

Vector MlpClassifier::compute_input_gradient(std::span<const double> x, int class_index) const {
  Vector upstream(model_.num_classes(), 0.0);
  upstream[static_cast<std::size_t>(class_index)] = 1.0;
  return model_.input_vjp(x, upstream);
}

ClassifierPtr train(const LabeledDataset& data, const MlpSpec& arch, const TrainConfig& cfg, std::string id) {
  return std::make_shared<MlpClassifier>(std::move(id), train_mlp(data, arch, cfg).model);
}

const MlpClassifier& require_mlp(const Classifier& h) {
  const auto* mlp = dynamic_cast<const MlpClassifier*>(&h);
  if (mlp == nullptr) throw Error("not-in-process", "model '" + h.id() + "' is not an in-process network");
  return *mlp;
}

ClassifierPtr make_linear_classifier(std::string id, std::vector<Vector> weights, Vector bias) {
  if (weights.empty() || weights.size() != bias.size()) throw Error("bad-architecture", "linear model shape");
  DenseLayer layer{weights.front().size(), weights.size(), {}, std::move(bias)};
  for (const auto& row : weights) {
    if (row.size() != layer.in) throw Error("bad-architecture", "ragged weight matrix");
    layer.weights.insert(layer.weights.end(), row.begin(), row.end());
  }
  std::vector<DenseLayer> layers;
  layers.push_back(std::move(layer));
  return std::make_shared<MlpClassifier>(std::move(id), Mlp(Activation::Relu, std::move(layers)));
}

void save_mlp(const Mlp& model, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kFormatVersion);
  const auto widths = model.widths();
  put_u32(out, static_cast<std::uint32_t>(widths.size()));
  for (auto w : widths) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(model.activation()));
  for (const auto& layer : model.layers()) {
    for (double w : layer.weights) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  if (!out) throw Error("io-error", "failed writing weights");
}

void save_mlp(const Mlp& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  save_mlp(model, out);
}

Mlp load_mlp(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error("corrupt-weights", "bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kFormatVersion) throw Error("corrupt-weights", "unsupported version " + std::to_string(version));
  const std::uint32_t n_widths = get_u32(in);
  if (n_widths < 2 || n_widths > 64) throw Error("corrupt-weights", "bad layer count");
  std::vector<std::size_t> widths(n_widths);
  for (auto& w : widths) {
    w = get_u32(in);
    if (w == 0 || w > (1u << 20)) throw Error("corrupt-weights", "bad layer width");
  }
  const std::uint32_t act = get_u32(in);
  if (act > 1) throw Error("corrupt-weights", "bad activation code");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{widths[l], widths[l + 1], {}, {}};
    layer.weights.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (double& w : layer.weights) w = get_f64(in);
    for (double& b : layer.bias) b = get_f64(in);
    layers.push_back(std::move(layer));
  }
  return Mlp(static_cast<Activation>(act), std::move(layers));
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot read " + path.string());
  try {
    return load_mlp(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace mfp
