#include "mfp/scheme.hpp"

#include "mfp/akh.hpp"
#include "mfp/error.hpp"

namespace mfp {

using nlohmann::json;

const char* to_string(DetectorPolicy p) { return p == DetectorPolicy::Direct ? "direct" : "calibrated"; }

namespace {

DetectorPolicy detector_from_string(std::string_view s) {
  if (s == "direct") return DetectorPolicy::Direct;
  if (s == "calibrated") return DetectorPolicy::Calibrated;
  throw Error("bad-scheme", "unknown detector policy '" + std::string(s) + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

SchemeSpec SchemeSpec::akh_baseline(std::size_t budget) {
  SchemeSpec s;
  s.name = "AKH";
  s.akh = true;
  s.sampler = SamplerSpec::negative();
  s.representation = RepresentationKind::RawLabels;
  s.budget = budget;
  return s;
}

void SchemeSpec::validate() const {
  if (budget == 0) throw Error("incompatible-scheme", "budget must be positive");
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) throw Error("incompatible-scheme", "target_fpr must be in [0,1]");
  if (akh) return;
  sampler.validate();
  if (representation == RepresentationKind::Pairwise && !sampler.produces_pairing()) {
    throw Error("incompatible-scheme", "pairwise representation needs a pairing sampler, got " + sampler.describe());
  }
}

std::string SchemeSpec::describe() const {
  if (akh) return "AKH";
  std::string out = sampler.describe() + "|" + to_string(representation);
  if (representation == RepresentationKind::Pairwise || representation == RepresentationKind::Listwise) {
    out += std::string("(") + to_string(inner) + ")";
  }
  return out + "|" + to_string(detector);
}

json to_json(const SamplerSpec& s) {
  json j = {{"type", to_string(s.type)}};
  switch (s.type) {
    case SamplerSpec::Type::Adversarial:
      if (s.adversarial.epsilon) j["epsilon"] = *s.adversarial.epsilon;
      j["steps"] = s.adversarial.steps;
      if (s.adversarial.step_size) j["step_size"] = *s.adversarial.step_size;
      break;
    case SamplerSpec::Type::Subsample:
      j["k_variants"] = s.k_variants;
      j["vicinity"] = s.vicinity;
      break;
    case SamplerSpec::Type::Chain: {
      j["stages"] = json::array();
      for (const auto& st : s.stages) j["stages"].push_back(to_json(st));
      break;
    }
    default:
      break;
  }
  return j;
}

SamplerSpec sampler_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "uniform") return SamplerSpec::uniform();
  if (type == "negative") return SamplerSpec::negative();
  if (type == "adversarial") {
    AdversarialParams p;
    if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
    p.steps = get_or(j, "steps", 20);
    if (j.contains("step_size")) p.step_size = j.at("step_size").get<double>();
    return SamplerSpec::adversarial_with(p);
  }
  if (type == "subsample") {
    return SamplerSpec::subsample(get_or<std::size_t>(j, "k_variants", 9), get_or(j, "vicinity", 0.7));
  }
  if (type == "chain") {
    const auto& stages = j.at("stages");
    if (!stages.is_array() || stages.size() < 2) throw Error("bad-scheme", "chain needs >= 2 stages");
    SamplerSpec out = sampler_from_json(stages[0]);
    for (std::size_t i = 1; i < stages.size(); ++i) out = chain_sampler(out, sampler_from_json(stages[i]));
    return out;
  }
  throw Error("bad-scheme", "unknown sampler type '" + type + "'");
}

json to_json(const SchemeSpec& s) {
  if (s.akh) return {{"name", s.name}, {"baseline", "akh"}, {"budget", s.budget},
                     {"seed_split", to_string(s.seed_split)}};
  return {{"name", s.name},
          {"sampler", to_json(s.sampler)},
          {"seed_split", to_string(s.seed_split)},
          {"representation", {{"kind", to_string(s.representation)}, {"inner", to_string(s.inner)}}},
          {"detector", {{"policy", to_string(s.detector)}, {"target_fpr", s.target_fpr}}},
          {"budget", s.budget}};
}

SchemeSpec scheme_from_json(const json& j) {
  SchemeSpec s;
  try {
    s.name = get_or<std::string>(j, "name", "");
    s.budget = get_or<std::size_t>(j, "budget", 100);
    s.seed_split = split_from_string(get_or<std::string>(j, "seed_split", "test"));
    if (j.contains("baseline")) {
      if (j.at("baseline") != "akh") throw Error("bad-scheme", "unknown baseline " + j.at("baseline").dump());
      s.akh = true;
      s.sampler = SamplerSpec::negative();
      if (s.name.empty()) s.name = "AKH";
    } else {
      s.sampler = sampler_from_json(j.at("sampler"));
      if (j.contains("representation")) {
        const auto& r = j.at("representation");
        s.representation = representation_from_string(r.at("kind").get<std::string>());
        s.inner = inner_distance_from_string(get_or<std::string>(r, "inner", "cosine"));
      }
      if (j.contains("detector")) {
        const auto& d = j.at("detector");
        s.detector = detector_from_string(get_or<std::string>(d, "policy", "direct"));
        s.target_fpr = get_or(d, "target_fpr", 0.05);
      }
    }
  } catch (const json::exception& e) {
    throw Error("bad-scheme", e.what());
  }
  if (s.name.empty()) s.name = s.describe();
  s.validate();
  return s;
}

FingerprintingScheme::FingerprintingScheme(SchemeSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

VictimContext FingerprintingScheme::prepare(const Classifier& victim, const LabeledDataset& seed_set,
                                            std::span<const ClassifierPtr> calibration_models,
                                            std::uint64_t seed) const {
  VictimContext ctx;
  ctx.victim = &victim;
  ctx.seed = seed;
  if (spec_.akh) {
    // Surface infeasibility now rather than per suspect.
    ctx.queries = akh_queries(victim, seed_set, spec_.budget, seed);
    ctx.seed_set = seed_set;
    return ctx;
  }
  ctx.queries = run_sampler(spec_.sampler, seed_set, victim, spec_.budget, seed);
  ctx.fingerprint = fingerprint_model(victim, ctx.queries, spec_.representation, spec_.inner);
  if (spec_.detector == DetectorPolicy::Calibrated) {
    CalibrationPool pool;
    for (const auto& m : calibration_models) {
      pool.fingerprints.push_back(fingerprint_model(*m, ctx.queries, spec_.representation, spec_.inner));
    }
    ctx.threshold = calibrate_threshold(ctx.fingerprint, pool, spec_.target_fpr);
    for (const auto& fp : pool.fingerprints) ctx.pool_distances.push_back(fingerprint_distance(ctx.fingerprint, fp));
  }
  return ctx;
}

SchemeScore FingerprintingScheme::score(const VictimContext& ctx, const Classifier& suspect) const {
  SchemeScore out;
  if (spec_.akh) {
    const AkhResult r = akh_test(*ctx.victim, suspect, ctx.seed_set, spec_.budget, ctx.seed);
    out.distance = 1.0 - r.match_score;
    out.score = out.distance;
    out.flag = r.flag;
    return out;
  }
  const Fingerprint fp = fingerprint_model(suspect, ctx.queries, spec_.representation, spec_.inner);
  out.distance = fingerprint_distance(ctx.fingerprint, fp);
  if (spec_.detector == DetectorPolicy::Calibrated) {
    out.score = calibrated_score(out.distance, ctx.pool_distances);
    out.flag = out.distance < *ctx.threshold;
  } else {
    out.score = out.distance;
  }
  return out;
}

SchemeScore FingerprintingScheme::operator()(const Classifier& victim, const Classifier& suspect,
                                             const LabeledDataset& seed_set,
                                             std::span<const ClassifierPtr> calibration_models,
                                             std::uint64_t seed) const {
  return score(prepare(victim, seed_set, calibration_models, seed), suspect);
}

FingerprintingScheme assemble_scheme(const SchemeSpec& spec) { return FingerprintingScheme(spec); }

std::vector<SchemeSpec> enumerate_schemes(std::size_t budget) {
  const std::vector<SamplerSpec> samplers = {
      SamplerSpec::uniform(),
      SamplerSpec::negative(),
      SamplerSpec::adversarial_with(),
      SamplerSpec::subsample(9, 0.7),
      chain_sampler(SamplerSpec::negative(), SamplerSpec::adversarial_with()),
      chain_sampler(SamplerSpec::negative(), SamplerSpec::subsample(9, 0.7)),
  };
  const std::vector<RepresentationKind> reps = {RepresentationKind::RawLabels, RepresentationKind::RawProbits,
                                                RepresentationKind::Pairwise, RepresentationKind::Listwise};
  std::vector<SchemeSpec> out;
  for (const auto& sampler : samplers) {
    if (!sampler.accepts_budget(budget)) continue;
    for (auto rep : reps) {
      if (rep == RepresentationKind::Pairwise && !sampler.produces_pairing()) continue;
      for (auto det : {DetectorPolicy::Direct, DetectorPolicy::Calibrated}) {
        SchemeSpec s;
        s.sampler = sampler;
        s.representation = rep;
        s.detector = det;
        s.budget = budget;
        s.name = s.describe();
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace mfp
