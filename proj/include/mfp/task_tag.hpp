#pragma once

#include <map>
#include <string>
#include <string_view>

namespace mfp {

// How a suspect model was produced from its victim (or independently).
enum class Stealing {
  Same,
  Quantize,
  Finetune,
  Transfer,
  Prune,
  ProbitExtraction,
  LabelExtraction,
  AdversarialLabelExtraction,
  Unrelated,
};

std::string_view to_string(Stealing s);
Stealing stealing_from_string(std::string_view name);

// True for the "model leak" family: the adversary holds the victim's weights.
bool is_model_leak(Stealing s);

struct TaskTag {
  Stealing stealing = Stealing::Unrelated;
  // Method parameters (prune fraction, quantization bits, epochs, ...).
  std::map<std::string, double> params;

  bool positive() const { return stealing != Stealing::Unrelated; }
  double param(const std::string& key, double fallback) const;
  std::string name() const { return std::string(to_string(stealing)); }

  bool operator==(const TaskTag&) const = default;
};

}  // namespace mfp
