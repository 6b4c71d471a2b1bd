#include "mfp/variants.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mfp/error.hpp"
#include "mfp/random.hpp"

namespace mfp {

namespace {

std::string derived_id(const Classifier& h, const std::string& id, const std::string& op) {
  return id.empty() ? h.id() + "/" + op : id;
}

std::string num(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

Provenance derived_from(const Classifier& h, Stealing how, std::map<std::string, double> params = {}) {
  return Provenance{TaskTag{how, std::move(params)}, h.id()};
}

std::vector<int> labels_of(const Classifier& h, const std::vector<Vector>& points) {
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(h.label(x));
  return out;
}

}  // namespace

ClassifierPtr copy_model(const Classifier& h, std::string id) {
  const auto& mlp = require_mlp(h);
  return std::make_shared<MlpClassifier>(derived_id(h, id, "same"), mlp.model(), derived_from(h, Stealing::Same));
}

ClassifierPtr prune(const Classifier& h, double fraction, std::string id) {
  if (!(fraction >= 0.0)) throw Error("bad-prune", "fraction must be >= 0");
  if (fraction >= 1.0) throw Error("degenerate-prune", "fraction must be < 1");
  Mlp model = require_mlp(h).model();
  struct Ref {
    double magnitude;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Ref> refs;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& w = model.layers()[l].weights;
    for (std::size_t i = 0; i < w.size(); ++i) refs.push_back({std::fabs(w[i]), l, i});
  }
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(refs.size())));
  // refs is already in flat-index order, so a stable sort breaks ties by index.
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.magnitude < b.magnitude; });
  for (std::size_t i = 0; i < count; ++i) model.layers()[refs[i].layer].weights[refs[i].index] = 0.0;
  return std::make_shared<MlpClassifier>(derived_id(h, id, "prune(" + num(fraction) + ")"), std::move(model),
                                         derived_from(h, Stealing::Prune, {{"fraction", fraction}}));
}

double quantize_value(double w, double w_max, int bits) {
  if (w_max <= 0.0) return 0.0;
  // 2^bits levels at +-(j + 1/2) * step, j = 0 .. 2^(bits-1) - 1, step = 2 w_max / (2^bits - 1).
  const double levels = std::ldexp(1.0, bits);
  const double step = 2.0 * w_max / (levels - 1.0);
  const double half_levels = levels / 2.0;
  const double j = std::clamp(std::round(std::fabs(w) / step - 0.5), 0.0, half_levels - 1.0);
  const double magnitude = (j + 0.5) * step;
  return std::signbit(w) ? -magnitude : magnitude;
}

ClassifierPtr quantize(const Classifier& h, int bits, std::string id) {
  if (bits < 2) throw Error("degenerate-quantization", "bits must be >= 2");
  if (bits > 52) throw Error("bad-quantization", "bits must be <= 52");
  Mlp model = require_mlp(h).model();
  for (auto& layer : model.layers()) {
    double w_max = 0.0;
    for (double w : layer.weights) w_max = std::max(w_max, std::fabs(w));
    for (double b : layer.bias) w_max = std::max(w_max, std::fabs(b));
    for (double& w : layer.weights) w = quantize_value(w, w_max, bits);
    for (double& b : layer.bias) b = quantize_value(b, w_max, bits);
  }
  return std::make_shared<MlpClassifier>(derived_id(h, id, "quantize(" + std::to_string(bits) + ")"),
                                         std::move(model),
                                         derived_from(h, Stealing::Quantize, {{"bits", static_cast<double>(bits)}}));
}

ClassifierPtr finetune(const Classifier& h, const LabeledDataset& data, const TrainConfig& cfg, std::uint64_t seed,
                       std::string id) {
  const Mlp& base = require_mlp(h).model();
  if (data.dim != base.input_dim() || static_cast<std::size_t>(data.num_classes) != base.num_classes()) {
    throw Error("incompatible-task", "finetuning data does not match the model's input/output shape");
  }
  auto result = fit(base, data.points, one_hot(data.labels, data.num_classes), cfg, derive_seed(seed, {2}));
  return std::make_shared<MlpClassifier>(
      derived_id(h, id, "finetune"), std::move(result.model),
      derived_from(h, Stealing::Finetune,
                   {{"epochs", cfg.epochs}, {"learning_rate", cfg.learning_rate}}));
}

ClassifierPtr transfer(const Classifier& h, const LabeledDataset& new_task, const TrainConfig& cfg,
                       std::uint64_t seed, std::string id) {
  Mlp model = require_mlp(h).model();
  if (new_task.dim != model.input_dim()) {
    throw Error("incompatible-task", "transfer task dimension " + std::to_string(new_task.dim) +
                                         " vs model input " + std::to_string(model.input_dim()));
  }
  // Fresh output head for the new label space.
  auto widths = model.widths();
  widths.back() = static_cast<std::size_t>(new_task.num_classes);
  const Mlp fresh = Mlp::initialize(MlpSpec{widths, model.activation(), derive_seed(seed, {1})});
  model.layers().back() = fresh.layers().back();
  auto result = fit(std::move(model), new_task.points, one_hot(new_task.labels, new_task.num_classes), cfg,
                    derive_seed(seed, {2}));
  return std::make_shared<MlpClassifier>(
      derived_id(h, id, "transfer"), std::move(result.model),
      derived_from(h, Stealing::Transfer, {{"epochs", cfg.epochs}, {"learning_rate", cfg.learning_rate}}));
}

const char* to_string(ExtractionMode m) {
  switch (m) {
    case ExtractionMode::Labels: return "labels";
    case ExtractionMode::Probits: return "probits";
    case ExtractionMode::AdversarialLabels: return "adversarial-labels";
  }
  return "labels";
}

ClassifierPtr extract(const Classifier& victim, const LabeledDataset& query_pool, MlpSpec arch,
                      const TrainConfig& cfg, ExtractionMode mode, std::uint64_t seed,
                      const ExtractionOptions& options, std::string id) {
  if (query_pool.empty()) throw Error("empty-query-pool", "extraction needs at least one query");
  arch.seed = seed;
  arch.validate();
  if (arch.layer_widths.front() != victim.input_dim() ||
      static_cast<int>(arch.layer_widths.back()) != victim.num_classes()) {
    throw Error("incompatible-task", "extractor architecture does not match the victim's input/output shape");
  }
  const int classes = victim.num_classes();
  const Mlp init = Mlp::initialize(arch);
  const std::uint64_t shuffle_seed = derive_seed(seed, {2});

  std::vector<Vector> inputs = query_pool.points;
  std::vector<Vector> targets;
  Stealing tag = Stealing::LabelExtraction;
  std::map<std::string, double> params{{"pool", static_cast<double>(query_pool.size())}};

  switch (mode) {
    case ExtractionMode::Labels:
      targets = one_hot(labels_of(victim, inputs), classes);
      break;
    case ExtractionMode::Probits: {
      tag = Stealing::ProbitExtraction;
      TrainConfig kl = cfg;
      kl.loss = Loss::DistillationKl;
      for (const auto& x : inputs) targets.push_back(victim.probits(x));
      auto result = fit(init, inputs, targets, kl, shuffle_seed);
      return std::make_shared<MlpClassifier>(derived_id(victim, id, "extract-probits"), std::move(result.model),
                                             derived_from(victim, tag, params));
    }
    case ExtractionMode::AdversarialLabels: {
      tag = Stealing::AdversarialLabelExtraction;
      auto interim_model = fit(init, inputs, one_hot(labels_of(victim, inputs), classes), cfg, shuffle_seed).model;
      const MlpClassifier interim("interim", std::move(interim_model));
      const auto n_adv = static_cast<std::size_t>(
          std::floor(options.adversarial_fraction * static_cast<double>(inputs.size())));
      const std::size_t n_seeds = std::min(n_adv, inputs.size());
      if (n_seeds > 0) {
        const QuerySet adv = adversarial_sampler(query_pool, interim, options.attack, 2 * n_seeds, derive_seed(seed, {3}));
        for (std::size_t i = n_seeds; i < adv.size(); ++i) inputs.push_back(adv.points[i]);
      }
      params["adversarial"] = static_cast<double>(n_seeds);
      targets = one_hot(labels_of(victim, inputs), classes);
      break;
    }
  }
  auto result = fit(init, inputs, targets, cfg, derive_seed(seed, {4}));
  return std::make_shared<MlpClassifier>(
      derived_id(victim, id, std::string("extract-") + to_string(mode)), std::move(result.model),
      derived_from(victim, tag, params));
}

ClassifierPtr unrelated(const LabeledDataset& task_data, MlpSpec arch, const TrainConfig& cfg, std::uint64_t seed,
                        std::string id) {
  arch.seed = seed;
  auto result = train_mlp(task_data, arch, cfg);
  return std::make_shared<MlpClassifier>(id.empty() ? "unrelated-" + std::to_string(seed) : std::move(id),
                                         std::move(result.model), Provenance{TaskTag{Stealing::Unrelated, {}}, ""});
}

namespace {

AccessLevel wrapped_access(const Classifier& inner, const OutputNoise& noise) {
  if (noise.mode == OutputNoise::Mode::TopKOnly) {
    if (noise.k < 1 || noise.k > inner.num_classes()) throw Error("bad-k", "top-k wrapper k=" + std::to_string(noise.k));
    return AccessLevel::top_k(noise.k);
  }
  if (!inner.access().permits(AccessLevel::probits())) throw Error("access-insufficient", "probit noise needs probits");
  return AccessLevel::probits();
}

Provenance wrapped_provenance(const Classifier& inner, const OutputNoise& noise) {
  Provenance p = inner.provenance();
  if (noise.mode == OutputNoise::Mode::TopKOnly) {
    p.tag.params["output_topk"] = noise.k;
  } else {
    p.tag.params["output_noise"] = noise.scale;
  }
  return p;
}

}  // namespace

OutputNoiseWrapper::OutputNoiseWrapper(ClassifierPtr inner, OutputNoise noise, std::string id)
    : Classifier({id.empty() ? inner->id() + "/noisy" : std::move(id), wrapped_access(*inner, noise),
                  inner->num_classes(), inner->input_dim(), wrapped_provenance(*inner, noise)}),
      inner_(std::move(inner)),
      noise_(noise) {}

Vector OutputNoiseWrapper::perturbed(std::span<const double> x) const {
  Vector p = inner_->probits(x);
  Rng rng(hash_doubles(x.data(), x.size(), noise_.seed));
  double sum = 0.0;
  for (double& v : p) {
    v = std::max(0.0, v + noise_.scale * rng.uniform(-1.0, 1.0));
    sum += v;
  }
  if (sum <= 0.0) return inner_->probits(x);
  for (double& v : p) v /= sum;
  return p;
}

int OutputNoiseWrapper::compute_label(std::span<const double> x) const {
  if (noise_.mode == OutputNoise::Mode::TopKOnly) return inner_->label(x);
  return argmax(perturbed(x));
}

std::vector<int> OutputNoiseWrapper::compute_top_k(std::span<const double> x, int k) const {
  if (noise_.mode == OutputNoise::Mode::TopKOnly) {
    // Answer from the inner model's ranking without exposing its scores.
    if (inner_->access().permits(AccessLevel::top_k(k))) return inner_->top_k(x, k);
    return {inner_->label(x)};
  }
  return top_k_indices(perturbed(x), k);
}

Vector OutputNoiseWrapper::compute_probits(std::span<const double> x) const { return perturbed(x); }

}  // namespace mfp
