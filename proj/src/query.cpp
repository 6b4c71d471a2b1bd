#include "mfp/query.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfp/error.hpp"
#include "mfp/mlp.hpp"
#include "mfp/random.hpp"

namespace mfp {

namespace {

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

std::string with_seed(const std::string& what, std::uint64_t seed) {
  return what + "#" + std::to_string(seed);
}

QuerySet pick(const QuerySet& pool, const std::vector<std::size_t>& idx, std::string provenance) {
  QuerySet out;
  out.provenance = std::move(provenance);
  out.points.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    out.points.push_back(pool.points[i]);
    out.labels.push_back(pool.labels[i]);
  }
  return out;
}

// Gradient of cross-entropy(h(u), target) with respect to u.
Vector cross_entropy_gradient(const Classifier& h, const Vector& u, int target) {
  Vector upstream = h.probits(u);
  upstream[static_cast<std::size_t>(target)] -= 1.0;
  if (const auto* mlp = dynamic_cast<const MlpClassifier*>(&h)) return mlp->model().input_vjp(u, upstream);
  Vector grad(u.size(), 0.0);
  for (int c = 0; c < h.num_classes(); ++c) {
    const double w = upstream[static_cast<std::size_t>(c)];
    if (w == 0.0) continue;
    const Vector g = h.input_gradient(u, c);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += w * g[j];
  }
  return grad;
}

AdversarialParams resolve(AdversarialParams p, const std::vector<Vector>& reference) {
  if (!p.epsilon) p.epsilon = 0.1 * mean_dimension_range(reference);
  if (!p.step_size) p.step_size = *p.epsilon / 8.0;
  return p;
}

SamplerSpec resolve_spec(SamplerSpec spec, const std::vector<Vector>& reference) {
  if (spec.type == SamplerSpec::Type::Adversarial) spec.adversarial = resolve(spec.adversarial, reference);
  for (auto& stage : spec.stages) stage = resolve_spec(stage, reference);
  return spec;
}

}  // namespace

void QuerySet::validate() const {
  if (labels.size() != points.size()) throw Error("bad-query-set", "labels/points length mismatch");
  for (const auto& [a, b] : pairing) {
    if (a >= points.size() || b >= points.size()) throw Error("bad-query-set", "pairing index out of range");
  }
}

QuerySet QuerySet::from_dataset(const LabeledDataset& data, std::string provenance) {
  return QuerySet{data.points, data.labels, {}, std::move(provenance)};
}

double mean_dimension_range(const std::vector<Vector>& points) {
  if (points.empty()) return 0.0;
  const std::size_t d = points.front().size();
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double lo = points.front()[j], hi = lo;
    for (const auto& x : points) {
      lo = std::min(lo, x[j]);
      hi = std::max(hi, x[j]);
    }
    total += hi - lo;
  }
  return d == 0 ? 0.0 : total / static_cast<double>(d);
}

QuerySet uniform_sampler(const QuerySet& pool, std::size_t s, std::uint64_t seed) {
  if (s > pool.size()) {
    throw Error("budget-exceeds-pool", std::to_string(s) + " queries from a pool of " + std::to_string(pool.size()));
  }
  Rng rng(seed);
  return pick(pool, rng.sample_without_replacement(pool.size(), s), with_seed("uniform", seed));
}

QuerySet uniform_sampler(const LabeledDataset& seed_set, std::size_t s, std::uint64_t seed) {
  return uniform_sampler(QuerySet::from_dataset(seed_set), s, seed);
}

QuerySet negative_sampler(const QuerySet& pool, const Classifier& h, std::size_t s, std::uint64_t seed) {
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.labels[i] == kUnknownLabel) throw Error("labels-required", "negative sampling needs ground-truth labels");
    if (h.label(pool.points[i]) != pool.labels[i]) negatives.push_back(i);
  }
  if (negatives.size() < s) throw InsufficientNegatives(negatives.size(), s);
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(s);
  for (std::size_t j : rng.sample_without_replacement(negatives.size(), s)) chosen.push_back(negatives[j]);
  return pick(pool, chosen, with_seed("negative", seed));
}

QuerySet negative_sampler(const LabeledDataset& seed_set, const Classifier& h, std::size_t s, std::uint64_t seed) {
  return negative_sampler(QuerySet::from_dataset(seed_set), h, s, seed);
}

QuerySet adversarial_sampler(const QuerySet& pool, const Classifier& h, const AdversarialParams& raw,
                             std::size_t s, std::uint64_t seed) {
  if (h.access().kind != AccessLevel::Kind::Gradients) {
    throw Error("gradient-required", "adversarial sampling needs gradient access to '" + h.id() + "'");
  }
  if (s % 2 != 0) throw Error("budget-shape-mismatch", "adversarial budget must be even");
  const AdversarialParams p = resolve(raw, pool.points);
  if (*p.epsilon < 0.0 || *p.step_size < 0.0 || p.steps < 0) throw Error("bad-sampler", "negative epsilon, step or steps");
  const double eps = *p.epsilon, step_size = *p.step_size;
  const std::size_t half = s / 2;
  QuerySet seeds = uniform_sampler(pool, half, seed);

  QuerySet out;
  out.points = seeds.points;
  out.labels = seeds.labels;
  out.points.reserve(s);
  out.labels.reserve(s);
  for (std::size_t i = 0; i < half; ++i) {
    const Vector& x = seeds.points[i];
    const int target = h.label(x);
    Vector u = x;
    for (int step = 0; step < p.steps && eps > 0.0; ++step) {
      const Vector g = cross_entropy_gradient(h, u, target);
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double dir = g[j] > 0 ? 1.0 : (g[j] < 0 ? -1.0 : 0.0);
        u[j] = std::clamp(u[j] + step_size * dir, x[j] - eps, x[j] + eps);
      }
    }
    out.points.push_back(std::move(u));
    out.labels.push_back(kUnknownLabel);
    out.pairing.emplace_back(i, i + half);
  }
  out.provenance = with_seed("adversarial(eps=" + fmt_double(eps) + ",steps=" + std::to_string(p.steps) +
                                 ",step=" + fmt_double(step_size) + ")",
                             seed);
  return out;
}

QuerySet adversarial_sampler(const LabeledDataset& seed_set, const Classifier& h, const AdversarialParams& params,
                             std::size_t s, std::uint64_t seed) {
  return adversarial_sampler(QuerySet::from_dataset(seed_set), h, params, s, seed);
}

QuerySet subsampler(const QuerySet& pool, std::size_t k_variants, double vicinity_scale, std::size_t s,
                    std::uint64_t seed) {
  if (!(vicinity_scale >= 0.0 && vicinity_scale <= 1.0)) throw Error("bad-sampler", "vicinity_scale must be in [0,1]");
  const std::size_t group = 1 + k_variants;
  if (s % group != 0) {
    throw Error("budget-shape-mismatch",
                "budget " + std::to_string(s) + " is not a multiple of 1 + k_variants = " + std::to_string(group));
  }
  const std::size_t n_seeds = s / group;
  Rng rng(derive_seed(seed, {1}));
  QuerySet out = uniform_sampler(pool, n_seeds, seed);
  out.points.reserve(s);
  for (std::size_t i = 0; i < n_seeds; ++i) {
    for (std::size_t v = 0; v < k_variants; ++v) {
      Vector x = out.points[i];
      for (double& xj : x) {
        if (rng.uniform() >= vicinity_scale) xj = 0.0;
      }
      out.pairing.emplace_back(i, out.points.size());
      out.points.push_back(std::move(x));
      out.labels.push_back(kUnknownLabel);
    }
  }
  out.provenance = with_seed("subsample(k=" + std::to_string(k_variants) + ",keep=" + fmt_double(vicinity_scale) + ")",
                             seed);
  return out;
}

QuerySet subsampler(const LabeledDataset& seed_set, std::size_t k_variants, double vicinity_scale, std::size_t s,
                    std::uint64_t seed) {
  return subsampler(QuerySet::from_dataset(seed_set), k_variants, vicinity_scale, s, seed);
}

const char* to_string(SamplerSpec::Type t) {
  switch (t) {
    case SamplerSpec::Type::Uniform: return "uniform";
    case SamplerSpec::Type::Negative: return "negative";
    case SamplerSpec::Type::Adversarial: return "adversarial";
    case SamplerSpec::Type::Subsample: return "subsample";
    case SamplerSpec::Type::Chain: return "chain";
  }
  return "uniform";
}

SamplerSpec SamplerSpec::uniform() { return {}; }

SamplerSpec SamplerSpec::negative() {
  SamplerSpec s;
  s.type = Type::Negative;
  return s;
}

SamplerSpec SamplerSpec::adversarial_with(AdversarialParams params) {
  SamplerSpec s;
  s.type = Type::Adversarial;
  s.adversarial = params;
  return s;
}

SamplerSpec SamplerSpec::subsample(std::size_t k_variants, double vicinity) {
  SamplerSpec s;
  s.type = Type::Subsample;
  s.k_variants = k_variants;
  s.vicinity = vicinity;
  return s;
}

SamplerSpec chain_sampler(SamplerSpec first, SamplerSpec second) {
  SamplerSpec out;
  out.type = SamplerSpec::Type::Chain;
  auto append = [&](SamplerSpec s) {
    if (s.type == SamplerSpec::Type::Chain) {
      for (auto& st : s.stages) out.stages.push_back(std::move(st));
    } else {
      out.stages.push_back(std::move(s));
    }
  };
  append(std::move(first));
  append(std::move(second));
  out.validate();
  return out;
}

void SamplerSpec::validate() const {
  switch (type) {
    case Type::Adversarial:
      if (adversarial.steps < 0) throw Error("bad-sampler", "adversarial steps must be >= 0");
      break;
    case Type::Subsample:
      if (!(vicinity >= 0.0 && vicinity <= 1.0)) throw Error("bad-sampler", "vicinity must be in [0,1]");
      break;
    case Type::Chain: {
      if (stages.size() < 2) throw Error("bad-sampler", "a chain needs at least two stages");
      bool generated = false;
      for (const auto& st : stages) {
        if (st.type == Type::Chain) throw Error("bad-sampler", "nested chains must be flattened");
        st.validate();
        if (st.type == Type::Negative && generated) {
          throw Error("incompatible-chain", "negative sampling cannot follow a stage that generates unlabeled points");
        }
        if (st.type == Type::Adversarial || st.type == Type::Subsample) generated = true;
      }
      break;
    }
    default:
      break;
  }
}

std::string SamplerSpec::describe() const {
  switch (type) {
    case Type::Uniform: return "uniform";
    case Type::Negative: return "negative";
    case Type::Adversarial: {
      std::string eps = adversarial.epsilon ? fmt_double(*adversarial.epsilon) : "auto";
      return "adversarial(eps=" + eps + ",steps=" + std::to_string(adversarial.steps) + ")";
    }
    case Type::Subsample:
      return "subsample(k=" + std::to_string(k_variants) + ",keep=" + fmt_double(vicinity) + ")";
    case Type::Chain: {
      std::string out = "chain[";
      for (std::size_t i = 0; i < stages.size(); ++i) out += (i ? "->" : "") + stages[i].describe();
      return out + "]";
    }
  }
  return "uniform";
}

bool SamplerSpec::produces_pairing() const {
  if (type == Type::Chain) return stages.back().produces_pairing();
  return type == Type::Adversarial || type == Type::Subsample;
}

bool SamplerSpec::needs_gradients() const {
  if (type == Type::Chain) {
    return std::any_of(stages.begin(), stages.end(), [](const auto& s) { return s.needs_gradients(); });
  }
  return type == Type::Adversarial;
}

bool SamplerSpec::needs_negatives() const {
  if (type == Type::Chain) {
    return std::any_of(stages.begin(), stages.end(), [](const auto& s) { return s.needs_negatives(); });
  }
  return type == Type::Negative;
}

std::size_t SamplerSpec::seeds_needed(std::size_t s) const {
  switch (type) {
    case Type::Adversarial: return s / 2;
    case Type::Subsample: return s / (1 + k_variants);
    case Type::Chain: {
      std::size_t need = s;
      for (std::size_t i = stages.size(); i-- > 0;) need = stages[i].seeds_needed(need);
      return need;
    }
    default: return s;
  }
}

bool SamplerSpec::accepts_budget(std::size_t s) const {
  switch (type) {
    case Type::Adversarial: return s % 2 == 0;
    case Type::Subsample: return s % (1 + k_variants) == 0;
    case Type::Chain: {
      std::size_t need = s;
      for (std::size_t i = stages.size(); i-- > 0;) {
        if (!stages[i].accepts_budget(need)) return false;
        need = stages[i].seeds_needed(need);
      }
      return true;
    }
    default: return true;
  }
}

namespace {

QuerySet run_resolved(const SamplerSpec& spec, const QuerySet& pool, const Classifier& h, std::size_t s,
                      std::uint64_t seed) {
  switch (spec.type) {
    case SamplerSpec::Type::Uniform: return uniform_sampler(pool, s, seed);
    case SamplerSpec::Type::Negative: return negative_sampler(pool, h, s, seed);
    case SamplerSpec::Type::Adversarial: return adversarial_sampler(pool, h, spec.adversarial, s, seed);
    case SamplerSpec::Type::Subsample: return subsampler(pool, spec.k_variants, spec.vicinity, s, seed);
    case SamplerSpec::Type::Chain: {
      std::vector<std::size_t> budgets(spec.stages.size());
      budgets.back() = s;
      for (std::size_t i = spec.stages.size() - 1; i-- > 0;) budgets[i] = spec.stages[i + 1].seeds_needed(budgets[i + 1]);
      QuerySet current = pool;
      std::string provenance = "chain[";
      for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        current = run_resolved(spec.stages[i], current, h, budgets[i], derive_seed(seed, {i}));
        provenance += (i ? "->" : "") + current.provenance;
      }
      current.provenance = provenance + "]";
      return current;
    }
  }
  throw Error("bad-sampler", "unknown sampler type");
}

}  // namespace

QuerySet run_sampler(const SamplerSpec& spec, const QuerySet& pool, const Classifier& h, std::size_t s,
                     std::uint64_t seed) {
  spec.validate();
  if (!spec.accepts_budget(s)) {
    throw Error("budget-shape-mismatch", "budget " + std::to_string(s) + " does not fit " + spec.describe());
  }
  return run_resolved(resolve_spec(spec, pool.points), pool, h, s, seed);
}

QuerySet run_sampler(const SamplerSpec& spec, const LabeledDataset& seed_set, const Classifier& h, std::size_t s,
                     std::uint64_t seed) {
  return run_sampler(spec, QuerySet::from_dataset(seed_set), h, s, seed);
}

}  // namespace mfp
