#include "mfp/tasks.hpp"

#include <cmath>
#include <numbers>

#include "mfp/error.hpp"
#include "mfp/random.hpp"

namespace mfp {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vector> blob_centers(const SyntheticTaskSpec& spec) {
  Rng rng(derive_seed(spec.seed, {0}));
  std::vector<Vector> centers(static_cast<std::size_t>(spec.num_classes), Vector(spec.dim));
  for (auto& c : centers) {
    for (double& v : c) v = rng.uniform(-spec.center_box, spec.center_box);
  }
  return centers;
}

Vector sample_point(const SyntheticTaskSpec& spec, const std::vector<Vector>& centers, int label, Rng& rng) {
  Vector x(spec.dim, 0.0);
  const double noise = 0.1 * spec.spread;
  switch (spec.family) {
    case TaskFamily::Blobs:
      for (std::size_t j = 0; j < spec.dim; ++j) x[j] = centers[static_cast<std::size_t>(label)][j] + spec.spread * rng.normal();
      return x;
    case TaskFamily::Moons: {
      const double t = rng.uniform(0.0, kPi);
      if (label == 0) {
        x[0] = std::cos(t);
        x[1] = std::sin(t);
      } else {
        x[0] = 1.0 - std::cos(t);
        x[1] = 0.5 - std::sin(t);
      }
      for (std::size_t j = 0; j < spec.dim; ++j) x[j] += noise * rng.normal();
      return x;
    }
    case TaskFamily::Rings: {
      const double t = rng.uniform(0.0, 2.0 * kPi);
      const double r = 1.0 + static_cast<double>(label);
      x[0] = r * std::cos(t);
      x[1] = r * std::sin(t);
      for (std::size_t j = 0; j < spec.dim; ++j) x[j] += noise * rng.normal();
      return x;
    }
  }
  return x;
}

LabeledDataset sample_split(const SyntheticTaskSpec& spec, const std::vector<Vector>& centers, std::size_t n,
                            Split split, std::uint64_t stream) {
  Rng rng(derive_seed(spec.seed, {stream, spec.draw}));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(spec.num_classes));
  rng.shuffle(labels);
  LabeledDataset data{spec.dim, spec.num_classes, {}, labels, std::vector<Split>(n, split)};
  data.points.reserve(n);
  for (int label : labels) data.points.push_back(sample_point(spec, centers, label, rng));
  return data;
}

}  // namespace

const char* to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::Blobs: return "blobs";
    case TaskFamily::Moons: return "moons";
    case TaskFamily::Rings: return "rings";
  }
  return "blobs";
}

TaskFamily task_family_from_string(std::string_view s) {
  if (s == "blobs") return TaskFamily::Blobs;
  if (s == "moons") return TaskFamily::Moons;
  if (s == "rings") return TaskFamily::Rings;
  throw Error("bad-task", "unknown family '" + std::string(s) + "'");
}

int max_classes(TaskFamily f) {
  switch (f) {
    case TaskFamily::Blobs: return 64;
    case TaskFamily::Moons: return 2;
    case TaskFamily::Rings: return 8;
  }
  return 2;
}

void SyntheticTaskSpec::validate() const {
  if (num_classes < 2) throw Error("bad-task", "num_classes must be >= 2");
  if (num_classes > max_classes(family)) {
    throw Error("infeasible-task", std::string(to_string(family)) + " supports at most " +
                                       std::to_string(max_classes(family)) + " classes");
  }
  if (dim < 1 || (family != TaskFamily::Blobs && dim < 2)) throw Error("bad-task", "dimension too small");
  if (n_train == 0) throw Error("bad-task", "n_train must be positive");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) throw Error("bad-task", "label_noise must be in [0, 0.5)");
  if (!(spread >= 0.0)) throw Error("bad-task", "spread must be non-negative");
}

TaskData generate_task(const SyntheticTaskSpec& spec) {
  spec.validate();
  const auto centers = spec.family == TaskFamily::Blobs ? blob_centers(spec) : std::vector<Vector>{};
  TaskData out{sample_split(spec, centers, spec.n_train, Split::Train, 1),
               sample_split(spec, centers, spec.n_test, Split::Test, 2)};

  const auto flips = static_cast<std::size_t>(std::floor(spec.label_noise * static_cast<double>(spec.n_train)));
  Rng rng(derive_seed(spec.seed, {3, spec.draw}));
  for (std::size_t i : rng.sample_without_replacement(spec.n_train, flips)) {
    const auto shift = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(spec.num_classes - 1)));
    out.train.labels[i] = (out.train.labels[i] + shift) % spec.num_classes;
  }
  return out;
}

}  // namespace mfp
