#pragma once

#include <cstdint>
#include <string>

#include "mfp/classifier.hpp"
#include "mfp/dataset.hpp"
#include "mfp/mlp.hpp"
#include "mfp/query.hpp"

namespace mfp {

// Every operation below returns a new handle tagged with its TaskTag and the
// victim id as parent; the input model is never modified. An empty `id`
// derives one from the parent id and the operation.

ClassifierPtr copy_model(const Classifier& h, std::string id = {});

// Zeros the floor(fraction * #weights) smallest-magnitude weights, ranked
// globally over all weight matrices (biases untouched), ties by flat index.
ClassifierPtr prune(const Classifier& h, double fraction, std::string id = {});

// Per layer, rounds weights and biases to the nearest of 2^bits levels evenly
// spaced over [-w_max, w_max] (w_max = largest magnitude in the layer).
ClassifierPtr quantize(const Classifier& h, int bits, std::string id = {});
// The grid rounding used by quantize, exposed for tests.
double quantize_value(double w, double w_max, int bits);

ClassifierPtr finetune(const Classifier& h, const LabeledDataset& data, const TrainConfig& cfg,
                       std::uint64_t seed, std::string id = {});

// Keeps the hidden layers, reinitializes the output layer for
// new_task.num_classes outputs, then trains the whole network on new_task.
ClassifierPtr transfer(const Classifier& h, const LabeledDataset& new_task, const TrainConfig& cfg,
                       std::uint64_t seed, std::string id = {});

enum class ExtractionMode { Labels, Probits, AdversarialLabels };

const char* to_string(ExtractionMode m);

struct ExtractionOptions {
  // AdversarialLabels: adversarial points added per pool point, and the
  // attack used against the extractor's interim model.
  double adversarial_fraction = 0.5;
  AdversarialParams attack;
};

// Trains `arch` (fresh init from `seed`) on the victim's answers over the
// pool. Labels: cross-entropy on victim labels. Probits: distillation-KL on
// victim probits. AdversarialLabels: trains an interim model on victim labels,
// generates adversarial points against it, labels them with the victim, and
// trains the final model on the augmented pool.
ClassifierPtr extract(const Classifier& victim, const LabeledDataset& query_pool, MlpSpec arch,
                      const TrainConfig& cfg, ExtractionMode mode, std::uint64_t seed,
                      const ExtractionOptions& options = {}, std::string id = {});

// Independently initialized and trained model (TaskTag Unrelated).
ClassifierPtr unrelated(const LabeledDataset& task_data, MlpSpec arch, const TrainConfig& cfg,
                        std::uint64_t seed, std::string id = {});

// Output-side obfuscation applied on top of any model.
struct OutputNoise {
  enum class Mode { TopKOnly, ProbitPerturbation };
  Mode mode = Mode::TopKOnly;
  int k = 1;           // TopKOnly
  double scale = 0.0;  // ProbitPerturbation: uniform noise amplitude
  std::uint64_t seed = 0;
};

// TopKOnly hides probits (access drops to TopK(k)) without changing the
// argmax. ProbitPerturbation adds deterministic, input-keyed noise to the
// probits and renormalizes; it may change the label.
class OutputNoiseWrapper final : public Classifier {
 public:
  OutputNoiseWrapper(ClassifierPtr inner, OutputNoise noise, std::string id = {});

  const ClassifierPtr& inner() const { return inner_; }
  const OutputNoise& noise() const { return noise_; }

 protected:
  int compute_label(std::span<const double> x) const override;
  std::vector<int> compute_top_k(std::span<const double> x, int k) const override;
  Vector compute_probits(std::span<const double> x) const override;

 private:
  Vector perturbed(std::span<const double> x) const;

  ClassifierPtr inner_;
  OutputNoise noise_;
};

}  // namespace mfp
