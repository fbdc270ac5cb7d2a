#include "boxlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

#include "boxlab/checkpoint.hpp"
#include "boxlab/server.hpp"

namespace boxlab {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig::ExperimentConfig() {
  problem.seed = 101;
  target_train.seed = 102;
  generator_seed = 103;
  shift.offset_seed = 104;
  pipeline.seed = 105;
  extract.train.seed = 106;
  mi.train.seed = 107;
  mi_label_only.probe.seed = 108;
  invert.train.seed = 109;
  invert_label_only.seed = 110;
}

MlpSpec ExperimentConfig::target_spec() const {
  MlpSpec spec;
  spec.layer_widths.push_back(problem.dim);
  for (std::size_t w : target_hidden) spec.layer_widths.push_back(w);
  spec.layer_widths.push_back(static_cast<std::size_t>(problem.class_count));
  spec.hidden_activation = target_activation;
  spec.output_head = OutputHead::kSoftmax;
  return spec;
}

void ExperimentConfig::validate() const {
  problem.validate();
  target_train.validate();
  pipeline.validate();
  shift.validate();
  if (generator_kind != "conditional_gaussian" && generator_kind != "random_noise" &&
      generator_kind != "remote")
    throw ConfigError("generator kind '" + generator_kind + "' unknown");
  if (!(box_lo < box_hi)) throw ConfigError("generator box_lo must be < box_hi");
  if (extract.enabled) {
    extract.train.validate();
    if (!(extract.split_ratio > 0.0 && extract.split_ratio < 1.0))
      throw ConfigError("extract.split_ratio must be in (0,1)");
  }
  if (mi.enabled) {
    if (!extract.enabled) throw ConfigError("mi needs extract enabled (shadow model)");
    mi.train.validate();
  }
  if (mi_label_only.enabled) mi_label_only.probe.validate();
  if (invert.enabled) invert.train.validate();
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size()) throw ConfigError("replicate seeds must be distinct");

  // Named stage seeds must be pairwise distinct so streams never collide.
  std::vector<std::uint64_t> named{problem.seed, target_train.seed, generator_seed,
                                   shift.offset_seed, pipeline.seed};
  if (extract.enabled) named.push_back(extract.train.seed);
  if (mi.enabled) named.push_back(mi.train.seed);
  if (mi_label_only.enabled) named.push_back(mi_label_only.probe.seed);
  if (invert.enabled) named.push_back(invert.train.seed);
  if (invert_label_only.enabled) named.push_back(invert_label_only.seed);
  if (defense) named.push_back(defense->seed);
  std::set<std::uint64_t> named_uniq(named.begin(), named.end());
  if (named_uniq.size() != named.size())
    throw ConfigError("stage seeds must be pairwise distinct");
}

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_train(const json& j, const std::string& where, TrainConfig& out) {
  require_keys(j, where,
               {"learning_rate", "epochs", "batch_size", "optimizer", "adam_beta1", "adam_beta2",
                "adam_eps", "weight_decay", "seed", "loss"});
  maybe(j, "learning_rate", out.learning_rate);
  maybe(j, "epochs", out.epochs);
  maybe(j, "batch_size", out.batch_size);
  if (j.contains("optimizer")) out.optimizer = optimizer_from_string(j.at("optimizer"));
  maybe(j, "adam_beta1", out.adam_beta1);
  maybe(j, "adam_beta2", out.adam_beta2);
  maybe(j, "adam_eps", out.adam_eps);
  maybe(j, "weight_decay", out.weight_decay);
  maybe(j, "seed", out.seed);
  if (j.contains("loss")) out.loss = loss_from_string(j.at("loss"));
}

void parse_pipeline(const json& j, const std::string& where, PipelineConfig& out) {
  require_keys(j, where,
               {"per_class_n", "delta0", "step", "shell_samples", "norm_order", "max_rounds",
                "anchors_per_class", "max_generate_attempts", "filter_sigma", "filter_two_sided",
                "parallel_classes", "seed"});
  maybe(j, "per_class_n", out.per_class_n);
  maybe(j, "delta0", out.delta0);
  maybe(j, "step", out.step);
  maybe(j, "shell_samples", out.shell_samples);
  if (j.contains("norm_order")) {
    const int p = j.at("norm_order").get<int>();
    if (p == 1) out.norm_order = NormOrder::kL1;
    else if (p == 2) out.norm_order = NormOrder::kL2;
    else if (p == 0) out.norm_order = NormOrder::kLinf;  // 0 encodes infinity
    else throw ConfigError(where + ": norm_order must be 1, 2 or 0 (infinity)");
  }
  maybe(j, "max_rounds", out.max_rounds);
  maybe(j, "anchors_per_class", out.anchors_per_class);
  maybe(j, "max_generate_attempts", out.max_generate_attempts);
  maybe(j, "filter_sigma", out.filter_sigma);
  maybe(j, "filter_two_sided", out.filter_two_sided);
  maybe(j, "parallel_classes", out.parallel_classes);
  maybe(j, "seed", out.seed);
}

json train_to_json(const TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"optimizer", to_string(t.optimizer)},
              {"adam_beta1", t.adam_beta1},
              {"adam_beta2", t.adam_beta2},
              {"adam_eps", t.adam_eps},
              {"weight_decay", t.weight_decay},
              {"seed", t.seed},
              {"loss", to_string(t.loss)}};
}

json pipeline_to_json(const PipelineConfig& p) {
  return json{{"per_class_n", p.per_class_n},
              {"delta0", p.delta0},
              {"step", p.step},
              {"shell_samples", p.shell_samples},
              {"norm_order", p.norm_order == NormOrder::kLinf ? 0 : static_cast<int>(p.norm_order)},
              {"max_rounds", p.max_rounds},
              {"anchors_per_class", p.anchors_per_class},
              {"max_generate_attempts", p.max_generate_attempts},
              {"filter_sigma", p.filter_sigma},
              {"filter_two_sided", p.filter_two_sided},
              {"parallel_classes", p.parallel_classes},
              {"seed", p.seed}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j = json::parse(json_text);
  ExperimentConfig cfg;
  require_keys(j, "config",
               {"problem", "target", "generator", "pipeline", "filter_enabled", "attacks",
                "defense", "seeds", "output_dir"});

  if (j.contains("problem")) {
    const auto& p = j["problem"];
    require_keys(p, "problem",
                 {"classes", "dim", "circle_radius", "class_std", "train_size",
                  "member_eval_size", "nonmember_eval_size", "seed"});
    maybe(p, "classes", cfg.problem.class_count);
    maybe(p, "dim", cfg.problem.dim);
    maybe(p, "circle_radius", cfg.problem.circle_radius);
    maybe(p, "class_std", cfg.problem.class_std);
    maybe(p, "train_size", cfg.problem.train_size);
    maybe(p, "member_eval_size", cfg.problem.member_eval_size);
    maybe(p, "nonmember_eval_size", cfg.problem.nonmember_eval_size);
    maybe(p, "seed", cfg.problem.seed);
  }

  if (j.contains("target")) {
    const auto& t = j["target"];
    require_keys(t, "target", {"hidden", "activation", "train"});
    maybe(t, "hidden", cfg.target_hidden);
    if (t.contains("activation"))
      cfg.target_activation = activation_from_string(t.at("activation"));
    if (t.contains("train")) parse_train(t["train"], "target.train", cfg.target_train);
  }

  if (j.contains("generator")) {
    const auto& g = j["generator"];
    require_keys(g, "generator",
                 {"kind", "variance_ratio", "mean_offset_scale", "offset_seed", "seed", "box_lo",
                  "box_hi", "remote_host", "remote_port"});
    maybe(g, "kind", cfg.generator_kind);
    maybe(g, "variance_ratio", cfg.shift.variance_ratio);
    maybe(g, "mean_offset_scale", cfg.shift.mean_offset_scale);
    maybe(g, "offset_seed", cfg.shift.offset_seed);
    maybe(g, "seed", cfg.generator_seed);
    maybe(g, "box_lo", cfg.box_lo);
    maybe(g, "box_hi", cfg.box_hi);
    maybe(g, "remote_host", cfg.remote_host);
    maybe(g, "remote_port", cfg.remote_port);
  }

  if (j.contains("pipeline")) parse_pipeline(j["pipeline"], "pipeline", cfg.pipeline);
  maybe(j, "filter_enabled", cfg.filter_enabled);

  if (j.contains("attacks")) {
    const auto& a = j["attacks"];
    require_keys(a, "attacks", {"extract", "mi", "mi_label_only", "invert", "invert_label_only"});
    if (a.contains("extract")) {
      const auto& e = a["extract"];
      require_keys(e, "attacks.extract", {"enabled", "hidden", "activation", "train", "split_ratio"});
      maybe(e, "enabled", cfg.extract.enabled);
      maybe(e, "hidden", cfg.extract.hidden);
      if (e.contains("activation"))
        cfg.extract.activation = activation_from_string(e.at("activation"));
      if (e.contains("train")) parse_train(e["train"], "attacks.extract.train", cfg.extract.train);
      maybe(e, "split_ratio", cfg.extract.split_ratio);
    }
    if (a.contains("mi")) {
      const auto& m = a["mi"];
      require_keys(m, "attacks.mi",
                   {"enabled", "hidden", "train", "sort_confidence", "tpr_fpr_levels"});
      maybe(m, "enabled", cfg.mi.enabled);
      maybe(m, "hidden", cfg.mi.hidden);
      if (m.contains("train")) parse_train(m["train"], "attacks.mi.train", cfg.mi.train);
      maybe(m, "sort_confidence", cfg.mi.sort_confidence);
      maybe(m, "tpr_fpr_levels", cfg.mi.tpr_fpr_levels);
    }
    if (a.contains("mi_label_only")) {
      const auto& m = a["mi_label_only"];
      require_keys(m, "attacks.mi_label_only", {"enabled", "probe", "tau", "calibration_per_class"});
      maybe(m, "enabled", cfg.mi_label_only.enabled);
      if (m.contains("probe"))
        parse_pipeline(m["probe"], "attacks.mi_label_only.probe", cfg.mi_label_only.probe);
      maybe(m, "tau", cfg.mi_label_only.tau);
      maybe(m, "calibration_per_class", cfg.mi_label_only.calibration_per_class);
    }
    if (a.contains("invert")) {
      const auto& iv = a["invert"];
      require_keys(iv, "attacks.invert", {"enabled", "hidden", "train"});
      maybe(iv, "enabled", cfg.invert.enabled);
      maybe(iv, "hidden", cfg.invert.hidden);
      if (iv.contains("train")) parse_train(iv["train"], "attacks.invert.train", cfg.invert.train);
    }
    if (a.contains("invert_label_only")) {
      const auto& iv = a["invert_label_only"];
      require_keys(iv, "attacks.invert_label_only", {"enabled", "seed"});
      maybe(iv, "enabled", cfg.invert_label_only.enabled);
      maybe(iv, "seed", cfg.invert_label_only.seed);
    }
  }

  if (j.contains("defense") && !j["defense"].is_null()) {
    const auto& d = j["defense"];
    require_keys(d, "defense", {"noise_mean", "noise_variance", "seed"});
    DefenseConfig dc;
    dc.seed = 111;
    maybe(d, "noise_mean", dc.noise_mean);
    maybe(d, "noise_variance", dc.noise_variance);
    maybe(d, "seed", dc.seed);
    cfg.defense = dc;
  }

  maybe(j, "seeds", cfg.seeds);
  maybe(j, "output_dir", cfg.output_dir);

  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = {{"classes", cfg.problem.class_count},
                  {"dim", cfg.problem.dim},
                  {"circle_radius", cfg.problem.circle_radius},
                  {"class_std", cfg.problem.class_std},
                  {"train_size", cfg.problem.train_size},
                  {"member_eval_size", cfg.problem.member_eval_size},
                  {"nonmember_eval_size", cfg.problem.nonmember_eval_size},
                  {"seed", cfg.problem.seed}};
  j["target"] = {{"hidden", cfg.target_hidden},
                 {"activation", to_string(cfg.target_activation)},
                 {"train", train_to_json(cfg.target_train)}};
  j["generator"] = {{"kind", cfg.generator_kind},
                    {"variance_ratio", cfg.shift.variance_ratio},
                    {"mean_offset_scale", cfg.shift.mean_offset_scale},
                    {"offset_seed", cfg.shift.offset_seed},
                    {"seed", cfg.generator_seed},
                    {"box_lo", cfg.box_lo},
                    {"box_hi", cfg.box_hi},
                    {"remote_host", cfg.remote_host},
                    {"remote_port", cfg.remote_port}};
  j["pipeline"] = pipeline_to_json(cfg.pipeline);
  j["filter_enabled"] = cfg.filter_enabled;
  j["attacks"] = {
      {"extract",
       {{"enabled", cfg.extract.enabled},
        {"hidden", cfg.extract.hidden},
        {"activation", to_string(cfg.extract.activation)},
        {"train", train_to_json(cfg.extract.train)},
        {"split_ratio", cfg.extract.split_ratio}}},
      {"mi",
       {{"enabled", cfg.mi.enabled},
        {"hidden", cfg.mi.hidden},
        {"train", train_to_json(cfg.mi.train)},
        {"sort_confidence", cfg.mi.sort_confidence},
        {"tpr_fpr_levels", cfg.mi.tpr_fpr_levels}}},
      {"mi_label_only",
       {{"enabled", cfg.mi_label_only.enabled},
        {"probe", pipeline_to_json(cfg.mi_label_only.probe)},
        {"tau", std::isnan(cfg.mi_label_only.tau) ? json() : json(cfg.mi_label_only.tau)},
        {"calibration_per_class", cfg.mi_label_only.calibration_per_class}}},
      {"invert",
       {{"enabled", cfg.invert.enabled},
        {"hidden", cfg.invert.hidden},
        {"train", train_to_json(cfg.invert.train)}}},
      {"invert_label_only",
       {{"enabled", cfg.invert_label_only.enabled}, {"seed", cfg.invert_label_only.seed}}}};
  if (cfg.defense) {
    j["defense"] = {{"noise_mean", cfg.defense->noise_mean},
                    {"noise_variance", cfg.defense->noise_variance},
                    {"seed", cfg.defense->seed}};
  } else {
    j["defense"] = nullptr;
  }
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["stages"] = json::array();
  for (const auto& s : stages) {
    j["stages"].push_back({{"name", s.name},
                           {"artifacts", s.artifacts},
                           {"wall_ms", s.wall_ms},
                           {"query_count_after", s.query_count_after}});
  }
  j["failed_stage"] = failed_stage;
  return j.dump(2);
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << "\n";
}

struct StageTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::shared_ptr<Generator> build_generator(const ExperimentConfig& cfg, std::uint64_t seed_mix) {
  const std::uint64_t seed = Rng::mix(cfg.generator_seed, seed_mix);
  if (cfg.generator_kind == "conditional_gaussian") {
    return std::make_shared<ConditionalGaussianGenerator>(cfg.problem.means(),
                                                          cfg.problem.class_std, cfg.shift, seed);
  }
  if (cfg.generator_kind == "random_noise") {
    return std::make_shared<RandomNoiseGenerator>(cfg.problem.dim, cfg.problem.class_count,
                                                  cfg.box_lo, cfg.box_hi, seed);
  }
  return std::make_shared<RemoteGenerator>(cfg.remote_host, cfg.remote_port, cfg.problem.dim,
                                           cfg.problem.class_count);
}

json summary_json(const SeedSummary& s) {
  json j{{"seed", s.seed}};
  if (s.has_extract) j["extract"] = json::parse(s.extract.to_json());
  if (s.has_mi) j["mi"] = json::parse(s.mi.to_json());
  if (s.has_mi_label) j["mi_label_only"] = json::parse(s.mi_label_only.to_json());
  if (s.has_invert) j["invert"] = json::parse(s.invert.to_json());
  return j;
}

}  // namespace

RunOutcome run(const ExperimentConfig& config) {
  config.validate();
  RunOutcome outcome;
  outcome.manifest.config_hash = config_hash(config);
  outcome.manifest.tool_version = kToolVersion;

  fs::create_directories(config.output_dir);
  write_file(config.output_dir + "/config.json", config_to_json(config));

  auto record = [&](const std::string& name, const StageTimer& timer,
                    std::vector<std::string> artifacts, std::uint64_t queries) {
    for (const auto& a : artifacts) {
      if (!fs::exists(a)) throw std::runtime_error("stage artifact missing: " + a);
    }
    outcome.manifest.stages.push_back(StageRecord{name, std::move(artifacts), timer.elapsed_ms(),
                                                  queries});
  };

  std::string current_stage;
  try {
    for (std::uint64_t seed : config.seeds) {
      const std::string dir = config.output_dir + "/seed_" + std::to_string(seed);
      fs::create_directories(dir);
      const std::string tag = "seed_" + std::to_string(seed) + "/";
      SeedSummary summary;
      summary.seed = seed;

      // Problem data
      current_stage = tag + "make-problem";
      StageTimer t0;
      ProblemSpec pspec = config.problem;
      pspec.seed = Rng::mix(config.problem.seed, seed);
      const Problem problem = make_problem(pspec);
      save_csv(problem.train, dir + "/train.csv");
      save_csv(problem.member_eval, dir + "/member_eval.csv");
      save_csv(problem.nonmember_eval, dir + "/nonmember_eval.csv");
      record(current_stage, t0,
             {dir + "/train.csv", dir + "/member_eval.csv", dir + "/nonmember_eval.csv"}, 0);

      // Target training
      current_stage = tag + "train-target";
      StageTimer t1;
      const MlpSpec tspec = config.target_spec();
      TrainConfig ttrain = config.target_train;
      ttrain.seed = Rng::mix(config.target_train.seed, seed);
      const TrainResult ttrained = train(problem.train, tspec, ttrain);
      save_checkpoint(tspec, ttrained.params, dir + "/target.json");
      auto raw_target = std::make_shared<MlpTarget>(tspec, ttrained.params, QueryMode::kConfidence);
      std::shared_ptr<Target> attack_target = raw_target;
      if (config.defense) {
        DefenseConfig dc = *config.defense;
        dc.seed = Rng::mix(dc.seed, seed);
        attack_target = wrap_with_defense(raw_target, dc);
      }
      record(current_stage, t1, {dir + "/target.json"}, raw_target->query_count());

      // Step 1
      current_stage = tag + "gen";
      StageTimer t2;
      auto generator = build_generator(config, seed);
      PipelineConfig pcfg = config.pipeline;
      pcfg.seed = Rng::mix(config.pipeline.seed, seed);
      Step1Result step1 =
          config.generator_kind == "random_noise"
              ? step1_random_baseline(*attack_target,
                                      static_cast<RandomNoiseGenerator&>(*generator), pcfg)
              : step1_generate(*attack_target, *generator, pcfg);
      save_csv(step1.data, dir + "/d_a.csv");
      {
        json rep;
        for (const auto& [c, n] : step1.report.kept_per_class) rep["kept"][std::to_string(c)] = n;
        for (const auto& [c, n] : step1.report.discarded_per_class)
          rep["discarded"][std::to_string(c)] = n;
        write_file(dir + "/step1_report.json", rep.dump(2));
      }
      record(current_stage, t2, {dir + "/d_a.csv", dir + "/step1_report.json"},
             raw_target->query_count());

      // Step 2
      current_stage = tag + "augment";
      StageTimer t3;
      const AugmentResult aug = augment(*attack_target, step1.data, pcfg);
      save_csv(aug.data, dir + "/d_aux.csv");
      record(current_stage, t3, {dir + "/d_aux.csv"}, raw_target->query_count());

      // Step 3
      current_stage = tag + "filter";
      StageTimer t4;
      Dataset d_aux_hat;
      if (config.filter_enabled) {
        FilterResult fr = filter(*attack_target, aug.data, pcfg);
        d_aux_hat = std::move(fr.data);
        write_file(dir + "/filter_report.json", fr.report.to_json());
      } else {
        d_aux_hat = aug.data;
        write_file(dir + "/filter_report.json", "{\n  \"disabled\": true\n}");
      }
      save_csv(d_aux_hat, dir + "/d_aux_hat.csv");
      record(current_stage, t4, {dir + "/d_aux_hat.csv", dir + "/filter_report.json"},
             raw_target->query_count());

      // Attacks
      ExtractionResult extraction;
      if (config.extract.enabled) {
        current_stage = tag + "attack-extract";
        StageTimer t5;
        MlpSpec sspec;
        sspec.layer_widths.push_back(config.problem.dim);
        for (std::size_t w : config.extract.hidden) sspec.layer_widths.push_back(w);
        sspec.layer_widths.push_back(static_cast<std::size_t>(config.problem.class_count));
        sspec.hidden_activation = config.extract.activation;
        sspec.output_head = OutputHead::kSoftmax;
        TrainConfig et = config.extract.train;
        et.seed = Rng::mix(config.extract.train.seed, seed);
        // Evaluation runs against the clean target: the defense only corrupts
        // what the attacker saw while building d_aux_hat.
        extraction = extract(*raw_target, d_aux_hat, sspec, et, config.extract.split_ratio,
                             problem.nonmember_eval);
        save_checkpoint(sspec, extraction.stolen_params, dir + "/stolen.json");
        write_file(dir + "/extract_report.json", extraction.report.to_json());
        summary.extract = extraction.report;
        summary.has_extract = true;
        record(current_stage, t5, {dir + "/stolen.json", dir + "/extract_report.json"},
               raw_target->query_count());
      }

      if (config.mi.enabled) {
        current_stage = tag + "attack-mi";
        StageTimer t6;
        MlpSpec aspec;
        aspec.layer_widths.push_back(2 * static_cast<std::size_t>(config.problem.class_count));
        for (std::size_t w : config.mi.hidden) aspec.layer_widths.push_back(w);
        aspec.layer_widths.push_back(1);
        aspec.hidden_activation = Activation::kRelu;
        aspec.output_head = OutputHead::kLinear;
        TrainConfig mt = config.mi.train;
        mt.seed = Rng::mix(config.mi.train.seed, seed);
        MiOptions opts;
        opts.sort_confidence = config.mi.sort_confidence;
        opts.tpr_fpr_levels = config.mi.tpr_fpr_levels;
        const TrainResult attack_model =
            mi_train_attack(extraction.stolen_spec, extraction.stolen_params,
                            extraction.train_split, extraction.test_split, aspec, mt, opts);
        summary.mi = mi_evaluate(aspec, attack_model.params, *attack_target, problem.member_eval,
                                 problem.nonmember_eval, opts);
        summary.has_mi = true;
        write_file(dir + "/mi_report.json", summary.mi.to_json());
        record(current_stage, t6, {dir + "/mi_report.json"}, raw_target->query_count());
      }

      if (config.mi_label_only.enabled) {
        current_stage = tag + "attack-mi-label-only";
        StageTimer t7;
        PipelineConfig probe = config.mi_label_only.probe;
        probe.seed = Rng::mix(config.mi_label_only.probe.seed, seed);
        double tau = config.mi_label_only.tau;
        if (std::isnan(tau)) {
          // Calibrate on fresh generated points, which are non-members.
          Dataset calib;
          calib.dim = config.problem.dim;
          calib.class_count = config.problem.class_count;
          for (int c = 0; c < config.problem.class_count; ++c) {
            Dataset d = generator->generate(c, config.mi_label_only.calibration_per_class);
            for (auto& s : d.samples) calib.samples.push_back(std::move(s));
          }
          tau = median_flip_radius(*attack_target, calib, probe);
        }
        summary.mi_label_only = mi_label_only_evaluate(*attack_target, problem.member_eval,
                                                       problem.nonmember_eval, tau, probe);
        summary.has_mi_label = true;
        write_file(dir + "/mi_label_report.json", summary.mi_label_only.to_json());
        record(current_stage, t7, {dir + "/mi_label_report.json"}, raw_target->query_count());
      }

      if (config.invert.enabled) {
        current_stage = tag + "attack-invert";
        StageTimer t8;
        MlpSpec ispec;
        if (config.invert.hidden.empty()) {
          ispec = default_inversion_spec(config.target_spec());
        } else {
          ispec.layer_widths.push_back(static_cast<std::size_t>(config.problem.class_count));
          for (std::size_t w : config.invert.hidden) ispec.layer_widths.push_back(w);
          ispec.layer_widths.push_back(config.problem.dim);
          ispec.hidden_activation = config.target_activation;
          ispec.output_head = OutputHead::kLinear;
        }
        TrainConfig it = config.invert.train;
        it.seed = Rng::mix(config.invert.train.seed, seed);
        const TrainResult inv = inversion_train(*attack_target, d_aux_hat, ispec, it);
        save_checkpoint(ispec, inv.params, dir + "/inversion.json");
        summary.invert =
            inversion_evaluate(ispec, inv.params, *attack_target, problem.nonmember_eval);
        summary.has_invert = true;
        write_file(dir + "/invert_report.json", summary.invert.to_json());
        record(current_stage, t8, {dir + "/inversion.json", dir + "/invert_report.json"},
               raw_target->query_count());
      }

      if (config.invert_label_only.enabled) {
        current_stage = tag + "attack-invert-label-only";
        StageTimer t9;
        Dataset reps;
        reps.dim = d_aux_hat.dim;
        reps.class_count = d_aux_hat.class_count;
        for (int c : d_aux_hat.present_classes()) {
          reps.samples.push_back(
              label_only_invert(d_aux_hat, c, Rng::mix(config.invert_label_only.seed, seed)));
        }
        save_csv(reps, dir + "/invert_label_representatives.csv");
        record(current_stage, t9, {dir + "/invert_label_representatives.csv"},
               raw_target->query_count());
      }

      current_stage = tag + "summary";
      write_file(dir + "/summary.json", summary_json(summary).dump(2));
      outcome.seeds.push_back(std::move(summary));
    }
  } catch (...) {
    outcome.manifest.failed_stage = current_stage;
    write_file(config.output_dir + "/manifest.json", outcome.manifest.to_json());
    throw;
  }

  // Cross-seed rollup
  json rollup;
  rollup["seeds"] = json::array();
  for (const auto& s : outcome.seeds) rollup["seeds"].push_back(summary_json(s));
  auto mean_of = [&](auto getter, auto has) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : outcome.seeds) {
      if (has(s)) {
        sum += getter(s);
        ++n;
      }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  };
  rollup["mean"] = {
      {"agreement", mean_of([](const SeedSummary& s) { return s.extract.agreement; },
                            [](const SeedSummary& s) { return s.has_extract; })},
      {"stolen_accuracy", mean_of([](const SeedSummary& s) { return s.extract.stolen_accuracy; },
                                  [](const SeedSummary& s) { return s.has_extract; })},
      {"target_accuracy", mean_of([](const SeedSummary& s) { return s.extract.target_accuracy; },
                                  [](const SeedSummary& s) { return s.has_extract; })},
      {"mi_auc", mean_of([](const SeedSummary& s) { return s.mi.auc; },
                         [](const SeedSummary& s) { return s.has_mi; })},
      {"mi_accuracy", mean_of([](const SeedSummary& s) { return s.mi.accuracy; },
                              [](const SeedSummary& s) { return s.has_mi; })},
      {"mi_label_accuracy",
       mean_of([](const SeedSummary& s) { return s.mi_label_only.accuracy; },
               [](const SeedSummary& s) { return s.has_mi_label; })},
      {"inversion_mse", mean_of([](const SeedSummary& s) { return s.invert.mse; },
                                [](const SeedSummary& s) { return s.has_invert; })},
      {"inversion_accuracy", mean_of([](const SeedSummary& s) { return s.invert.accuracy; },
                                     [](const SeedSummary& s) { return s.has_invert; })}};
  write_file(config.output_dir + "/summary.json", rollup.dump(2));
  write_file(config.output_dir + "/manifest.json", outcome.manifest.to_json());
  return outcome;
}

std::string DefenseEvalReport::to_json() const {
  json j{{"agreement_without", agreement_without},
         {"agreement_with", agreement_with},
         {"extraction_drop", extraction_drop},
         {"mi_auc_without", mi_auc_without},
         {"mi_auc_with", mi_auc_with},
         {"mi_auc_drop", mi_auc_drop}};
  return j.dump(2);
}

DefenseEvalReport defense_eval(const ExperimentConfig& config) {
  if (!config.defense) throw ConfigError("defense_eval: config has no defense block");
  ExperimentConfig without = config;
  without.defense.reset();
  without.output_dir = config.output_dir + "/without_defense";
  ExperimentConfig with = config;
  with.output_dir = config.output_dir + "/with_defense";

  const RunOutcome base = run(without);
  const RunOutcome defended = run(with);

  auto mean_agreement = [](const RunOutcome& o) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : o.seeds) {
      if (x.has_extract) {
        s += x.extract.agreement;
        ++n;
      }
    }
    return n ? s / static_cast<double>(n) : 0.0;
  };
  auto mean_auc = [](const RunOutcome& o) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : o.seeds) {
      if (x.has_mi) {
        s += x.mi.auc;
        ++n;
      }
    }
    return n ? s / static_cast<double>(n) : 0.0;
  };

  DefenseEvalReport rep;
  rep.agreement_without = mean_agreement(base);
  rep.agreement_with = mean_agreement(defended);
  rep.extraction_drop = rep.agreement_without - rep.agreement_with;
  rep.mi_auc_without = mean_auc(base);
  rep.mi_auc_with = mean_auc(defended);
  rep.mi_auc_drop = rep.mi_auc_without - rep.mi_auc_with;

  write_file(config.output_dir + "/defense_report.json", rep.to_json());
  return rep;
}

}  // namespace boxlab
