#include "mfp/benchmark.hpp"

#include <fstream>

#include "mfp/error.hpp"
#include "mfp/log.hpp"
#include "mfp/parallel.hpp"
#include "mfp/random.hpp"
#include "mfp/variants.hpp"
#include "mfp/version.hpp"

namespace mfp {

using nlohmann::json;

namespace {

// Stream ids under the benchmark seed.
enum Stream : std::uint64_t {
  kVictimDraw = 1,
  kVictimInit = 2,
  kStolen = 3,
  kUnrelatedDraw = 4,
  kUnrelatedInit = 5,
  kCalibrationDraw = 6,
  kCalibrationInit = 7,
};

constexpr std::uint64_t kTransferConcept = 0x7472616e73666572ULL;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::size_t param_size(const TaskTag& tag, const char* key, std::size_t fallback) {
  const double v = tag.param(key, static_cast<double>(fallback));
  if (!(v >= 0.0)) throw Error("bad-config", std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

MlpSpec victim_arch(const BenchmarkConfig& c, std::uint64_t seed) {
  MlpSpec arch;
  arch.layer_widths.push_back(c.task.dim);
  for (auto w : c.hidden) arch.layer_widths.push_back(w);
  arch.layer_widths.push_back(static_cast<std::size_t>(c.task.num_classes));
  arch.activation = c.activation;
  arch.seed = seed;
  return arch;
}

SyntheticTaskSpec draw_of(const SyntheticTaskSpec& task, std::uint64_t draw, std::size_t n_train,
                          std::size_t n_test) {
  SyntheticTaskSpec s = task;
  s.draw = draw;
  s.n_train = n_train;
  s.n_test = n_test;
  return s;
}

ClassifierPtr apply_output_noise(ClassifierPtr model, const TaskTag& recipe, std::uint64_t seed) {
  if (recipe.params.count("output_topk")) {
    OutputNoise n;
    n.mode = OutputNoise::Mode::TopKOnly;
    n.k = static_cast<int>(recipe.param("output_topk", 1));
    const std::string id = model->id();
    return std::make_shared<OutputNoiseWrapper>(std::move(model), n, id);
  }
  if (recipe.params.count("output_noise")) {
    OutputNoise n;
    n.mode = OutputNoise::Mode::ProbitPerturbation;
    n.scale = recipe.param("output_noise", 0.0);
    n.seed = seed;
    const std::string id = model->id();
    return std::make_shared<OutputNoiseWrapper>(std::move(model), n, id);
  }
  return model;
}

ClassifierPtr make_stolen(const BenchmarkConfig& c, const Classifier& victim, const LabeledDataset& victim_train,
                          const TaskTag& recipe, std::uint64_t seed, const std::string& id) {
  const auto& tag = recipe;
  auto cfg_from = [&](int epochs, double lr) {
    TrainConfig cfg = c.train;
    cfg.epochs = static_cast<int>(tag.param("epochs", epochs));
    cfg.learning_rate = tag.param("learning_rate", lr);
    return cfg;
  };
  ClassifierPtr out;
  switch (tag.stealing) {
    case Stealing::Same:
      out = copy_model(victim, id);
      break;
    case Stealing::Quantize:
      out = quantize(victim, static_cast<int>(tag.param("bits", 8)), id);
      break;
    case Stealing::Prune:
      out = prune(victim, tag.param("fraction", 0.5), id);
      break;
    case Stealing::Finetune: {
      const auto data = generate_task(draw_of(c.task, derive_seed(seed, {1}), param_size(tag, "data", c.task.n_train), 0));
      out = finetune(victim, data.train, cfg_from(5, 0.01), derive_seed(seed, {2}), id);
      break;
    }
    case Stealing::Transfer: {
      SyntheticTaskSpec t = draw_of(c.task, derive_seed(seed, {1}), param_size(tag, "data", c.task.n_train), 0);
      if (tag.param("same_concept", 0.0) == 0.0) t.seed = c.task.seed ^ kTransferConcept;
      t.num_classes = static_cast<int>(tag.param("num_classes", c.task.num_classes));
      out = transfer(victim, generate_task(t).train, cfg_from(c.train.epochs, c.train.learning_rate),
                     derive_seed(seed, {2}), id);
      break;
    }
    case Stealing::ProbitExtraction:
    case Stealing::LabelExtraction:
    case Stealing::AdversarialLabelExtraction: {
      // Default pool: the victim's own training inputs. disjoint_pool != 0
      // draws a fresh pool of `queries` points instead.
      LabeledDataset pool = victim_train;
      if (tag.param("disjoint_pool", 0.0) != 0.0) {
        pool = generate_task(draw_of(c.task, derive_seed(seed, {1}), param_size(tag, "queries", c.task.n_train), 0)).train;
      }
      MlpSpec arch = victim_arch(c, derive_seed(seed, {2}));
      if (tag.params.count("hidden_width")) {
        for (std::size_t i = 1; i + 1 < arch.layer_widths.size(); ++i) {
          arch.layer_widths[i] = param_size(tag, "hidden_width", arch.layer_widths[i]);
        }
      }
      const ExtractionMode mode = tag.stealing == Stealing::ProbitExtraction  ? ExtractionMode::Probits
                                  : tag.stealing == Stealing::LabelExtraction ? ExtractionMode::Labels
                                                                              : ExtractionMode::AdversarialLabels;
      out = extract(victim, pool, arch, cfg_from(c.train.epochs, c.train.learning_rate), mode,
                    derive_seed(seed, {3}), {}, id);
      break;
    }
    case Stealing::Unrelated:
      throw Error("bad-config", "Unrelated is not a stealing method");
  }
  return apply_output_noise(std::move(out), recipe, derive_seed(seed, {4}));
}

std::string victim_id(std::size_t v) { return "v" + std::to_string(v); }

}  // namespace

void BenchmarkConfig::validate() const {
  task.validate();
  train.validate();
  if (stolen.empty()) throw Error("empty-task-list", "no stealing methods configured");
  if (num_victims == 0) throw Error("bad-config", "num_victims must be positive");
  if (unrelated_per_victim == 0) throw Error("bad-config", "unrelated_per_victim must be positive");
  if (hidden.empty()) throw Error("bad-config", "at least one hidden layer is required");
  for (const auto& s : stolen) {
    if (!s.tag.positive()) throw Error("bad-config", "Unrelated is not a stealing method");
    if (s.count == 0) throw Error("bad-config", "stolen count for " + s.tag.name() + " must be positive");
  }
}

BenchmarkConfig BenchmarkConfig::desk_default() {
  BenchmarkConfig c;
  c.seed = 0;
  c.task.family = TaskFamily::Blobs;
  c.task.num_classes = 10;
  c.task.dim = 10;
  c.task.n_train = 600;
  c.task.n_test = 1000;
  c.task.label_noise = 0.1;
  c.task.spread = 1.0;
  c.task.center_box = 2.0;
  c.task.seed = 0;
  c.hidden = {32};
  c.train.epochs = 30;
  c.train.learning_rate = 0.05;
  c.train.batch_size = 32;
  for (Stealing s : {Stealing::Same, Stealing::Quantize, Stealing::Prune, Stealing::Finetune, Stealing::Transfer,
                     Stealing::ProbitExtraction, Stealing::LabelExtraction, Stealing::AdversarialLabelExtraction}) {
    c.stolen.push_back({TaskTag{s, {}}, 5});
  }
  c.num_victims = 5;
  c.unrelated_per_victim = 10;
  c.calibration_per_victim = 5;
  return c;
}

json to_json(const BenchmarkConfig& c) {
  json stolen = json::array();
  for (const auto& s : c.stolen) {
    stolen.push_back({{"tag", s.tag.name()}, {"count", s.count}, {"params", s.tag.params}});
  }
  return {{"seed", c.seed},
          {"task",
           {{"family", to_string(c.task.family)},
            {"num_classes", c.task.num_classes},
            {"dim", c.task.dim},
            {"n_train", c.task.n_train},
            {"n_test", c.task.n_test},
            {"label_noise", c.task.label_noise},
            {"spread", c.task.spread},
            {"center_box", c.task.center_box},
            {"seed", c.task.seed}}},
          {"victim",
           {{"hidden", c.hidden},
            {"activation", to_string(c.activation)},
            {"train",
             {{"epochs", c.train.epochs},
              {"learning_rate", c.train.learning_rate},
              {"batch_size", c.train.batch_size},
              {"weight_decay", c.train.weight_decay}}}}},
          {"num_victims", c.num_victims},
          {"stolen", stolen},
          {"unrelated_per_victim", c.unrelated_per_victim},
          {"calibration_per_victim", c.calibration_per_victim}};
}

BenchmarkConfig benchmark_config_from_json(const json& j) {
  BenchmarkConfig c = BenchmarkConfig::desk_default();
  try {
    if (!j.is_object()) throw Error("bad-config", "config must be a JSON object");
    c.seed = get_or(j, "seed", c.seed);
    if (j.contains("task")) {
      const auto& t = j.at("task");
      c.task.family = task_family_from_string(get_or<std::string>(t, "family", to_string(c.task.family)));
      c.task.num_classes = get_or(t, "num_classes", c.task.num_classes);
      c.task.dim = get_or(t, "dim", c.task.dim);
      c.task.n_train = get_or(t, "n_train", c.task.n_train);
      c.task.n_test = get_or(t, "n_test", c.task.n_test);
      c.task.label_noise = get_or(t, "label_noise", c.task.label_noise);
      c.task.spread = get_or(t, "spread", c.task.spread);
      c.task.center_box = get_or(t, "center_box", c.task.center_box);
      c.task.seed = get_or(t, "seed", c.task.seed);
    }
    if (j.contains("victim")) {
      const auto& v = j.at("victim");
      c.hidden = get_or(v, "hidden", c.hidden);
      c.activation = activation_from_string(get_or<std::string>(v, "activation", to_string(c.activation)));
      if (v.contains("train")) {
        const auto& t = v.at("train");
        c.train.epochs = get_or(t, "epochs", c.train.epochs);
        c.train.learning_rate = get_or(t, "learning_rate", c.train.learning_rate);
        c.train.batch_size = get_or(t, "batch_size", c.train.batch_size);
        c.train.weight_decay = get_or(t, "weight_decay", c.train.weight_decay);
      }
    }
    c.num_victims = get_or(j, "num_victims", c.num_victims);
    c.unrelated_per_victim = get_or(j, "unrelated_per_victim", c.unrelated_per_victim);
    c.calibration_per_victim = get_or(j, "calibration_per_victim", c.calibration_per_victim);
    if (j.contains("stolen")) {
      c.stolen.clear();
      for (const auto& s : j.at("stolen")) {
        StolenSpec spec;
        spec.tag.stealing = stealing_from_string(s.at("tag").get<std::string>());
        spec.tag.params = get_or(s, "params", std::map<std::string, double>{});
        spec.count = get_or(s, "count", spec.count);
        c.stolen.push_back(std::move(spec));
      }
    }
  } catch (const json::exception& e) {
    throw Error("bad-config", e.what());
  }
  c.validate();
  return c;
}

void BenchmarkTriplet::validate() const {
  if (victims.empty()) throw Error("bad-benchmark", "no victims");
  for (const auto& v : victims) {
    if (!v.model) throw Error("bad-benchmark", "missing victim model");
    if (v.stolen.empty() || v.unrelated.empty()) {
      throw Error("bad-benchmark", "victim " + v.model->id() + " needs stolen and unrelated models");
    }
    for (const auto& s : v.stolen) {
      if (!s->tag().positive() || s->provenance().parent_id != v.model->id()) {
        throw Error("bad-benchmark", s->id() + " does not derive from " + v.model->id());
      }
    }
    for (const auto* group : {&v.unrelated, &v.calibration}) {
      for (const auto& u : *group) {
        if (u->tag().positive() || !u->provenance().parent_id.empty()) {
          throw Error("bad-benchmark", u->id() + " is not an independent model");
        }
      }
    }
  }
}

std::size_t BenchmarkTriplet::model_count() const {
  std::size_t n = 0;
  for (const auto& v : victims) n += 1 + v.stolen.size() + v.unrelated.size() + v.calibration.size();
  return n;
}

BenchmarkTriplet build_benchmark(const BenchmarkConfig& config, std::size_t workers) {
  config.validate();
  BenchmarkTriplet b;
  b.config = config;
  b.victims.resize(config.num_victims);

  parallel_for(config.num_victims, workers, [&](std::size_t v) {
    auto& e = b.victims[v];
    e.draw = derive_seed(config.seed, {kVictimDraw, v});
    auto data = generate_task(draw_of(config.task, e.draw, config.task.n_train, config.task.n_test));
    e.train = std::move(data.train);
    e.test = std::move(data.test);
    e.model = train(e.train, victim_arch(config, derive_seed(config.seed, {kVictimInit, v})), config.train,
                    victim_id(v));
  });

  struct Job {
    std::size_t victim;
    int role;  // 0 stolen, 1 unrelated, 2 calibration
    std::size_t recipe;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < config.num_victims; ++v) {
    for (std::size_t r = 0; r < config.stolen.size(); ++r) {
      for (std::size_t i = 0; i < config.stolen[r].count; ++i) jobs.push_back({v, 0, r, i});
    }
    for (std::size_t u = 0; u < config.unrelated_per_victim; ++u) jobs.push_back({v, 1, 0, u});
    for (std::size_t u = 0; u < config.calibration_per_victim; ++u) jobs.push_back({v, 2, 0, u});
  }
  std::vector<ClassifierPtr> models(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto vid = victim_id(job.victim);
    if (job.role == 0) {
      const auto& tag = config.stolen[job.recipe].tag;
      const auto seed = derive_seed(config.seed, {kStolen, job.victim, job.recipe, job.index});
      models[j] = make_stolen(config, *b.victims[job.victim].model, b.victims[job.victim].train, tag, seed,
                              vid + "." + tag.name() + "." + std::to_string(job.recipe) + "." +
                                  std::to_string(job.index));
      return;
    }
    const bool calib = job.role == 2;
    const auto draw = derive_seed(config.seed, {calib ? kCalibrationDraw : kUnrelatedDraw, job.victim, job.index});
    const auto data = generate_task(draw_of(config.task, draw, config.task.n_train, 0));
    const auto seed = derive_seed(config.seed, {calib ? kCalibrationInit : kUnrelatedInit, job.victim, job.index});
    models[j] = unrelated(data.train, victim_arch(config, seed), config.train, seed,
                          vid + (calib ? ".calibration." : ".unrelated.") + std::to_string(job.index));
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& e = b.victims[jobs[j].victim];
    (jobs[j].role == 0 ? e.stolen : jobs[j].role == 1 ? e.unrelated : e.calibration).push_back(std::move(models[j]));
  }
  b.validate();
  return b;
}

namespace {

struct Unwrapped {
  const MlpClassifier* mlp = nullptr;
  const OutputNoiseWrapper* wrapper = nullptr;
};

Unwrapped unwrap(const Classifier& h) {
  Unwrapped u;
  const Classifier* inner = &h;
  if (const auto* w = dynamic_cast<const OutputNoiseWrapper*>(&h)) {
    u.wrapper = w;
    inner = w->inner().get();
  }
  u.mlp = &require_mlp(*inner);
  return u;
}

json model_entry(const Classifier& h, const std::string& role, const std::filesystem::path& dir) {
  const Unwrapped u = unwrap(h);
  const std::string file = "models/" + h.id() + ".bin";
  save_mlp(u.mlp->model(), dir / file);
  const TaskTag& tag = u.mlp->tag();
  json e = {{"id", h.id()},
            {"role", role},
            {"file", file},
            {"tag", {{"name", tag.name()}, {"params", tag.params}}},
            {"parent", u.mlp->provenance().parent_id}};
  if (u.wrapper) {
    const auto& n = u.wrapper->noise();
    e["output"] = {{"mode", n.mode == OutputNoise::Mode::TopKOnly ? "topk" : "perturb"},
                   {"k", n.k},
                   {"scale", n.scale},
                   {"seed", n.seed}};
  }
  return e;
}

ClassifierPtr load_entry(const json& e, const std::filesystem::path& dir) {
  TaskTag tag;
  tag.stealing = stealing_from_string(e.at("tag").at("name").get<std::string>());
  tag.params = e.at("tag").at("params").get<std::map<std::string, double>>();
  const auto id = e.at("id").get<std::string>();
  ClassifierPtr model = std::make_shared<MlpClassifier>(id, load_mlp(dir / e.at("file").get<std::string>()),
                                                        Provenance{tag, e.at("parent").get<std::string>()});
  if (e.contains("output")) {
    const auto& o = e.at("output");
    OutputNoise n;
    n.mode = o.at("mode") == "topk" ? OutputNoise::Mode::TopKOnly : OutputNoise::Mode::ProbitPerturbation;
    n.k = o.at("k").get<int>();
    n.scale = o.at("scale").get<double>();
    n.seed = o.at("seed").get<std::uint64_t>();
    model = std::make_shared<OutputNoiseWrapper>(std::move(model), n, id);
  }
  return model;
}

}  // namespace

void save_benchmark(const BenchmarkTriplet& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "models");
  std::filesystem::create_directories(dir / "data");
  json victims = json::array();
  for (const auto& v : b.victims) {
    const auto vid = v.model->id();
    json entry = model_entry(*v.model, "victim", dir);
    entry["draw"] = v.draw;
    entry["train_data"] = "data/" + vid + "_train.csv";
    entry["test_data"] = "data/" + vid + "_test.csv";
    write_csv(v.train, dir / entry["train_data"].get<std::string>());
    write_csv(v.test, dir / entry["test_data"].get<std::string>());
    for (const auto& [role, group] : {std::pair{"stolen", &v.stolen}, std::pair{"unrelated", &v.unrelated},
                                      std::pair{"calibration", &v.calibration}}) {
      entry[role] = json::array();
      for (const auto& m : *group) entry[role].push_back(model_entry(*m, role, dir));
    }
    victims.push_back(std::move(entry));
  }
  const json manifest = {{"format", "mfp-benchmark"},
                         {"version", 1},
                         {"toolkit_version", kVersion},
                         {"config", to_json(b.config)},
                         {"victims", victims}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("io-error", "cannot write " + (dir / "manifest.json").string());
}

BenchmarkTriplet load_benchmark(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error("corrupt-manifest", "cannot read " + path.string());
  try {
    const json m = json::parse(in);
    if (m.at("format") != "mfp-benchmark" || m.at("version") != 1) {
      throw Error("corrupt-manifest", "unsupported manifest format");
    }
    BenchmarkTriplet b;
    b.config = benchmark_config_from_json(m.at("config"));
    for (const auto& e : m.at("victims")) {
      VictimEntry v;
      v.model = load_entry(e, dir);
      v.draw = e.at("draw").get<std::uint64_t>();
      v.train = read_csv(dir / e.at("train_data").get<std::string>(), v.model->num_classes());
      v.test = read_csv(dir / e.at("test_data").get<std::string>(), v.model->num_classes());
      for (const auto& s : e.at("stolen")) v.stolen.push_back(load_entry(s, dir));
      for (const auto& s : e.at("unrelated")) v.unrelated.push_back(load_entry(s, dir));
      for (const auto& s : e.value("calibration", json::array())) v.calibration.push_back(load_entry(s, dir));
      b.victims.push_back(std::move(v));
    }
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw Error("corrupt-manifest", path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == "corrupt-manifest") throw;
    throw Error("corrupt-manifest", path.string() + ": " + e.what());
  }
}

}  // namespace mfp
