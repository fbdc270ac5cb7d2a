// boxlab: black-box model-related attack laboratory.
//
// Every stage reads and writes plain files (CSV datasets, JSON checkpoints
// and reports) so a pipeline can be resumed or inspected at any point.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "boxlab/attacks.hpp"
#include "boxlab/checkpoint.hpp"
#include "boxlab/diffusion.hpp"
#include "boxlab/experiment.hpp"
#include "boxlab/server.hpp"

namespace fs = std::filesystem;
using namespace boxlab;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << "\n";
}

struct TrainFlags {
  double lr = 0.01;
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::string optimizer = "adam";
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch", batch, "batch size");
    app->add_option("--optimizer", optimizer, "sgd or adam");
    app->add_option("--weight-decay", weight_decay, "L2 penalty");
    app->add_option("--seed", seed, "training seed");
  }
  TrainConfig to_config(Loss loss) const {
    TrainConfig t;
    t.learning_rate = lr;
    t.epochs = epochs;
    t.batch_size = batch;
    t.optimizer = optimizer_from_string(optimizer);
    t.weight_decay = weight_decay;
    t.seed = seed;
    t.loss = loss;
    return t;
  }
};

struct ProbeFlags {
  double delta0 = 0.1;
  double step = 0.1;
  std::size_t shell = 30;
  std::size_t max_rounds = 40;
  int norm = 2;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--delta0", delta0, "initial probing radius");
    app->add_option("--step", step, "radius increment per round");
    app->add_option("--shell-samples", shell, "probes per round");
    app->add_option("--max-rounds", max_rounds, "round cap");
    app->add_option("--norm", norm, "norm order: 1, 2, or 0 for infinity");
    app->add_option("--probe-seed", seed, "probing seed");
  }
  PipelineConfig to_config() const {
    PipelineConfig p;
    p.delta0 = delta0;
    p.step = step;
    p.shell_samples = shell;
    p.max_rounds = max_rounds;
    p.norm_order = norm == 1 ? NormOrder::kL1 : norm == 0 ? NormOrder::kLinf : NormOrder::kL2;
    p.seed = seed;
    return p;
  }
};

std::shared_ptr<Target> open_target(const std::string& checkpoint, const std::string& mode,
                                    double defense_variance, double defense_mean,
                                    std::uint64_t defense_seed) {
  auto [spec, params] = load_checkpoint(checkpoint);
  const QueryMode qm = mode == "label" ? QueryMode::kLabelOnly : QueryMode::kConfidence;
  std::shared_ptr<Target> t = std::make_shared<MlpTarget>(spec, params, qm);
  if (defense_variance > 0.0 || defense_mean != 0.0) {
    DefenseConfig dc;
    dc.noise_variance = defense_variance;
    dc.noise_mean = defense_mean;
    dc.seed = defense_seed;
    t = wrap_with_defense(t, dc);
  }
  return t;
}

MlpSpec spec_from_widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                         const std::string& activation, OutputHead head) {
  MlpSpec s;
  s.layer_widths.push_back(in);
  for (std::size_t w : hidden) s.layer_widths.push_back(w);
  s.layer_widths.push_back(out);
  s.hidden_activation = activation_from_string(activation);
  s.output_head = head;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boxlab: data-free black-box attacks against small classifiers"};
  app.require_subcommand(1);

  // ---- make-problem ----
  auto* mk = app.add_subcommand("make-problem", "synthesize the benchmark problem datasets");
  ProblemSpec pspec;
  std::string mk_out = "out";
  mk->add_option("--classes", pspec.class_count);
  mk->add_option("--dim", pspec.dim);
  mk->add_option("--radius", pspec.circle_radius);
  mk->add_option("--std", pspec.class_std);
  mk->add_option("--train-size", pspec.train_size);
  mk->add_option("--member-size", pspec.member_eval_size);
  mk->add_option("--nonmember-size", pspec.nonmember_eval_size);
  mk->add_option("--seed", pspec.seed);
  mk->add_option("--out-dir", mk_out);
  mk->callback([&]() {
    fs::create_directories(mk_out);
    const Problem p = make_problem(pspec);
    save_csv(p.train, mk_out + "/train.csv");
    save_csv(p.member_eval, mk_out + "/member_eval.csv");
    save_csv(p.nonmember_eval, mk_out + "/nonmember_eval.csv");
    std::cout << "wrote " << mk_out << "/{train,member_eval,nonmember_eval}.csv\n";
  });

  // ---- train-target ----
  auto* tt = app.add_subcommand("train-target", "train an MLP on a CSV dataset");
  std::string tt_data, tt_out = "target.json", tt_activation = "relu";
  std::vector<std::size_t> tt_hidden{32};
  TrainFlags tt_train;
  tt->add_option("--data", tt_data)->required();
  tt->add_option("--hidden", tt_hidden, "hidden layer widths");
  tt->add_option("--activation", tt_activation);
  tt_train.attach(tt);
  tt->add_option("--out", tt_out);
  tt->callback([&]() {
    const Dataset data = load_csv(tt_data);
    const MlpSpec spec =
        spec_from_widths(data.dim, tt_hidden, static_cast<std::size_t>(data.class_count),
                         tt_activation, OutputHead::kSoftmax);
    const TrainResult r = train(data, spec, tt_train.to_config(Loss::kCrossEntropy));
    save_checkpoint(spec, r.params, tt_out);
    std::cout << "final epoch loss " << r.loss_history.back() << ", checkpoint " << tt_out << "\n";
  });

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "step 1: generate target-validated samples per class");
  std::string gen_target, gen_out = "d_a.csv", gen_report, gen_kind = "conditional_gaussian";
  std::string gen_remote_host = "127.0.0.1";
  int gen_remote_port = 0;
  double gen_rho = 0.5, gen_eta = 0.5, gen_radius = 3.0, gen_std = 1.0;
  double gen_box_lo = -6.0, gen_box_hi = 6.0;
  std::uint64_t gen_offset_seed = 0, gen_seed = 0, gen_pipe_seed = 0;
  std::size_t gen_n = 50, gen_attempts = 5;
  gen->add_option("--target", gen_target)->required();
  gen->add_option("--kind", gen_kind, "conditional_gaussian | random_noise | remote");
  gen->add_option("--per-class-n", gen_n);
  gen->add_option("--variance-ratio", gen_rho);
  gen->add_option("--mean-offset", gen_eta);
  gen->add_option("--radius", gen_radius, "class-mean circle radius of the assumed problem");
  gen->add_option("--std", gen_std, "class std of the assumed problem");
  gen->add_option("--offset-seed", gen_offset_seed);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--pipeline-seed", gen_pipe_seed);
  gen->add_option("--max-attempts", gen_attempts);
  gen->add_option("--box-lo", gen_box_lo);
  gen->add_option("--box-hi", gen_box_hi);
  gen->add_option("--remote-host", gen_remote_host);
  gen->add_option("--remote-port", gen_remote_port);
  gen->add_option("--out", gen_out);
  gen->add_option("--report", gen_report);
  gen->callback([&]() {
    auto target = open_target(gen_target, "confidence", 0.0, 0.0, 0);
    PipelineConfig cfg;
    cfg.per_class_n = gen_n;
    cfg.max_generate_attempts = gen_attempts;
    cfg.seed = gen_pipe_seed;

    std::shared_ptr<Generator> g;
    Step1Result res;
    if (gen_kind == "random_noise") {
      auto rn = std::make_shared<RandomNoiseGenerator>(target->dim(), target->classes(),
                                                       gen_box_lo, gen_box_hi, gen_seed);
      res = step1_random_baseline(*target, *rn, cfg);
    } else {
      if (gen_kind == "remote") {
        g = std::make_shared<RemoteGenerator>(gen_remote_host, gen_remote_port, target->dim(),
                                              target->classes());
      } else {
        ProblemSpec assumed;
        assumed.class_count = target->classes();
        assumed.dim = target->dim();
        assumed.circle_radius = gen_radius;
        assumed.class_std = gen_std;
        ShiftKnobs knobs{gen_rho, gen_eta, gen_offset_seed};
        g = std::make_shared<ConditionalGaussianGenerator>(assumed.means(), gen_std, knobs,
                                                           gen_seed);
      }
      res = step1_generate(*target, *g, cfg);
    }
    save_csv(res.data, gen_out);
    if (!gen_report.empty()) {
      nlohmann::json rep;
      for (const auto& [c, n] : res.report.kept_per_class) rep["kept"][std::to_string(c)] = n;
      for (const auto& [c, n] : res.report.discarded_per_class)
        rep["discarded"][std::to_string(c)] = n;
      write_file(gen_report, rep.dump(2));
    }
    std::cout << "wrote " << res.data.size() << " samples to " << gen_out << " ("
              << target->query_count() << " queries)\n";
  });

  // ---- augment ----
  auto* aug = app.add_subcommand("augment", "step 2: boundary-probing augmentation");
  std::string aug_target, aug_in, aug_out = "d_aux.csv";
  std::size_t aug_anchors = 1;
  bool aug_serial = false;
  ProbeFlags aug_probe;
  aug_probe.delta0 = 0.3;
  aug_probe.step = 0.3;
  aug_probe.shell = 20;
  aug_probe.max_rounds = 64;
  aug->add_option("--target", aug_target)->required();
  aug->add_option("--in", aug_in)->required();
  aug->add_option("--out", aug_out);
  aug->add_option("--anchors", aug_anchors, "anchors per class");
  aug->add_flag("--serial", aug_serial, "disable per-class parallelism");
  aug_probe.attach(aug);
  aug->callback([&]() {
    auto target = open_target(aug_target, "confidence", 0.0, 0.0, 0);
    PipelineConfig cfg = aug_probe.to_config();
    cfg.anchors_per_class = aug_anchors;
    cfg.parallel_classes = !aug_serial;
    const Dataset d_a = load_csv(aug_in);
    const AugmentResult res = augment(*target, d_a, cfg);
    save_csv(res.data, aug_out);
    std::cout << "augmented " << d_a.size() << " -> " << res.data.size() << " samples ("
              << target->query_count() << " queries)\n";
  });

  // ---- filter ----
  auto* fil = app.add_subcommand("filter", "step 3: inter-class three-sigma filtering");
  std::string fil_target, fil_in, fil_out = "d_aux_hat.csv", fil_report = "filter_report.json";
  double fil_sigma = 3.0;
  bool fil_one_sided = false;
  fil->add_option("--target", fil_target)->required();
  fil->add_option("--in", fil_in)->required();
  fil->add_option("--out", fil_out);
  fil->add_option("--report", fil_report);
  fil->add_option("--sigma", fil_sigma, "deviation threshold in population stds");
  fil->add_flag("--one-sided", fil_one_sided, "flag only the upper tail");
  fil->callback([&]() {
    auto target = open_target(fil_target, "confidence", 0.0, 0.0, 0);
    PipelineConfig cfg;
    cfg.filter_sigma = fil_sigma;
    cfg.filter_two_sided = !fil_one_sided;
    const Dataset d_aux = load_csv(fil_in);
    const FilterResult res = filter(*target, d_aux, cfg);
    save_csv(res.data, fil_out);
    write_file(fil_report, res.report.to_json());
    std::cout << "kept " << res.data.size() << "/" << d_aux.size() << " samples; report "
              << fil_report << "\n";
  });

  // ---- attack ----
  auto* atk = app.add_subcommand("attack", "run one attack");
  atk->require_subcommand(1);

  // attack extract
  auto* ext = atk->add_subcommand("extract", "train a substitute and measure agreement");
  std::string ext_target, ext_data, ext_eval, ext_report = "extract_report.json";
  std::string ext_model_out = "stolen.json", ext_activation = "relu";
  std::string ext_train_split_out, ext_test_split_out;
  std::vector<std::size_t> ext_hidden{32};
  double ext_ratio = 0.8;
  TrainFlags ext_train;
  ext->add_option("--target", ext_target)->required();
  ext->add_option("--data", ext_data)->required();
  ext->add_option("--eval", ext_eval)->required();
  ext->add_option("--hidden", ext_hidden);
  ext->add_option("--activation", ext_activation);
  ext->add_option("--split-ratio", ext_ratio);
  ext_train.attach(ext);
  ext->add_option("--report", ext_report);
  ext->add_option("--model-out", ext_model_out);
  ext->add_option("--train-split-out", ext_train_split_out);
  ext->add_option("--test-split-out", ext_test_split_out);
  ext->callback([&]() {
    auto target = open_target(ext_target, "confidence", 0.0, 0.0, 0);
    const Dataset data = load_csv(ext_data);
    const Dataset eval = load_csv(ext_eval);
    const MlpSpec spec =
        spec_from_widths(target->dim(), ext_hidden, static_cast<std::size_t>(target->classes()),
                         ext_activation, OutputHead::kSoftmax);
    const ExtractionResult res = extract(*target, data, spec, ext_train.to_config(Loss::kCrossEntropy),
                                         ext_ratio, eval);
    save_checkpoint(spec, res.stolen_params, ext_model_out);
    write_file(ext_report, res.report.to_json());
    if (!ext_train_split_out.empty()) save_csv(res.train_split, ext_train_split_out);
    if (!ext_test_split_out.empty()) save_csv(res.test_split, ext_test_split_out);
    std::cout << res.report.to_json() << "\n";
  });

  // attack mi
  auto* mi = atk->add_subcommand("mi", "shadow-model membership inference");
  std::string mi_target, mi_shadow, mi_train_csv, mi_test_csv, mi_member, mi_nonmember;
  std::string mi_report = "mi_report.json";
  std::vector<std::size_t> mi_hidden{16};
  bool mi_unsorted = false;
  std::vector<double> mi_levels{0.01};
  TrainFlags mi_train;
  mi_train.epochs = 300;
  mi->add_option("--target", mi_target)->required();
  mi->add_option("--shadow", mi_shadow, "shadow (stolen) model checkpoint")->required();
  mi->add_option("--shadow-train", mi_train_csv, "shadow training split")->required();
  mi->add_option("--shadow-test", mi_test_csv, "shadow held-out split")->required();
  mi->add_option("--member", mi_member)->required();
  mi->add_option("--nonmember", mi_nonmember)->required();
  mi->add_option("--hidden", mi_hidden);
  mi->add_flag("--unsorted", mi_unsorted, "keep confidence order instead of sorting");
  mi->add_option("--tpr-fpr", mi_levels);
  mi_train.attach(mi);
  mi->add_option("--report", mi_report);
  mi->callback([&]() {
    auto target = open_target(mi_target, "confidence", 0.0, 0.0, 0);
    auto [sspec, sparams] = load_checkpoint(mi_shadow);
    MiOptions opts;
    opts.sort_confidence = !mi_unsorted;
    opts.tpr_fpr_levels = mi_levels;
    const MlpSpec aspec =
        spec_from_widths(2 * static_cast<std::size_t>(target->classes()), mi_hidden, 1, "relu",
                         OutputHead::kLinear);
    const TrainResult a =
        mi_train_attack(sspec, sparams, load_csv(mi_train_csv), load_csv(mi_test_csv), aspec,
                        mi_train.to_config(Loss::kBinaryCrossEntropy), opts);
    const MIReport rep = mi_evaluate(aspec, a.params, *target, load_csv(mi_member),
                                     load_csv(mi_nonmember), opts);
    write_file(mi_report, rep.to_json());
    std::cout << rep.to_json() << "\n";
  });

  // attack mi-label-only
  auto* mlo = atk->add_subcommand("mi-label-only", "flip-radius membership inference");
  std::string mlo_target, mlo_member, mlo_nonmember, mlo_calibrate;
  std::string mlo_report = "mi_label_report.json";
  double mlo_tau = -1.0;
  ProbeFlags mlo_probe;
  mlo->add_option("--target", mlo_target)->required();
  mlo->add_option("--member", mlo_member)->required();
  mlo->add_option("--nonmember", mlo_nonmember)->required();
  mlo->add_option("--tau", mlo_tau, "membership threshold; < 0 = calibrate");
  mlo->add_option("--calibrate", mlo_calibrate, "CSV of fresh points for tau calibration");
  mlo_probe.attach(mlo);
  mlo->add_option("--report", mlo_report);
  mlo->callback([&]() {
    auto target = open_target(mlo_target, "label", 0.0, 0.0, 0);
    const PipelineConfig probe = mlo_probe.to_config();
    double tau = mlo_tau;
    if (tau < 0.0) {
      if (mlo_calibrate.empty())
        throw ConfigError("mi-label-only: give --tau or --calibrate");
      tau = median_flip_radius(*target, load_csv(mlo_calibrate), probe);
    }
    const MIReport rep = mi_label_only_evaluate(*target, load_csv(mlo_member),
                                                load_csv(mlo_nonmember), tau, probe);
    write_file(mlo_report, rep.to_json());
    std::cout << "tau " << tau << "\n" << rep.to_json() << "\n";
  });

  // attack invert
  auto* inv = atk->add_subcommand("invert", "confidence-to-input inversion");
  std::string inv_target, inv_data, inv_originals, inv_report = "invert_report.json";
  std::string inv_model_out = "inversion.json";
  std::vector<std::size_t> inv_hidden;
  TrainFlags inv_train;
  inv_train.epochs = 400;
  inv->add_option("--target", inv_target)->required();
  inv->add_option("--data", inv_data)->required();
  inv->add_option("--originals", inv_originals)->required();
  inv->add_option("--hidden", inv_hidden, "decoder hidden widths (default: mirrored target)");
  inv_train.attach(inv);
  inv->add_option("--report", inv_report);
  inv->add_option("--model-out", inv_model_out);
  inv->callback([&]() {
    auto target = open_target(inv_target, "confidence", 0.0, 0.0, 0);
    auto [tspec, tparams] = load_checkpoint(inv_target);
    const MlpSpec ispec = inv_hidden.empty()
                              ? default_inversion_spec(tspec)
                              : spec_from_widths(static_cast<std::size_t>(target->classes()),
                                                 inv_hidden, target->dim(), "relu",
                                                 OutputHead::kLinear);
    const TrainResult r =
        inversion_train(*target, load_csv(inv_data), ispec, inv_train.to_config(Loss::kMse));
    save_checkpoint(ispec, r.params, inv_model_out);
    const InversionReport rep =
        inversion_evaluate(ispec, r.params, *target, load_csv(inv_originals));
    write_file(inv_report, rep.to_json());
    std::cout << rep.to_json() << "\n";
  });

  // attack invert-label-only
  auto* ilo = atk->add_subcommand("invert-label-only", "class representative selection");
  std::string ilo_data, ilo_out = "representative.csv";
  int ilo_class = 0;
  std::uint64_t ilo_seed = 0;
  ilo->add_option("--data", ilo_data)->required();
  ilo->add_option("--class", ilo_class)->required();
  ilo->add_option("--seed", ilo_seed);
  ilo->add_option("--out", ilo_out);
  ilo->callback([&]() {
    const Dataset data = load_csv(ilo_data);
    Dataset rep;
    rep.dim = data.dim;
    rep.class_count = data.class_count;
    rep.samples.push_back(label_only_invert(data, ilo_class, ilo_seed));
    save_csv(rep, ilo_out);
    std::cout << "representative for class " << ilo_class << " -> " << ilo_out << "\n";
  });

  // ---- defense-eval ----
  auto* de = app.add_subcommand("defense-eval", "compare attacks with and without the defense");
  std::string de_config;
  de->add_option("--config", de_config)->required();
  de->callback([&]() {
    const ExperimentConfig cfg = parse_config(read_file(de_config));
    const DefenseEvalReport rep = defense_eval(cfg);
    std::cout << rep.to_json() << "\n";
  });

  // ---- shiftlab ----
  auto* sl = app.add_subcommand("shiftlab", "toy-diffusion and distribution-shift experiments");
  sl->require_subcommand(1);

  auto* slc = sl->add_subcommand("chains", "reverse-chain ensemble trajectories");
  std::size_t slc_steps = 100, slc_chains = 10000, slc_dim = 1;
  double slc_alpha_start = 0.9999, slc_alpha_end = 0.91, slc_mean = 3.0, slc_std = 0.5;
  bool slc_stochastic = false;
  std::uint64_t slc_seed = 0;
  std::string slc_out = "trajectory.csv";
  slc->add_option("--steps", slc_steps);
  slc->add_option("--alpha-start", slc_alpha_start);
  slc->add_option("--alpha-end", slc_alpha_end);
  slc->add_option("--chains", slc_chains);
  slc->add_option("--dim", slc_dim);
  slc->add_option("--mean", slc_mean, "data mean per coordinate");
  slc->add_option("--std", slc_std, "data std");
  slc->add_flag("--stochastic", slc_stochastic, "keep the sigma_t xi term");
  slc->add_option("--seed", slc_seed);
  slc->add_option("--out", slc_out);
  slc->callback([&]() {
    const VarianceSchedule sched = linear_alpha_schedule(slc_steps, slc_alpha_start, slc_alpha_end);
    GaussianDataSpec data;
    data.mean.assign(slc_dim, slc_mean);
    data.stddev = slc_std;
    const auto traj = reverse_trajectory_stats(slc_chains, sched, data, slc_stochastic, slc_seed);
    std::ofstream out(slc_out);
    out << "t,mean,variance\n";
    for (const auto& p : traj) out << p.t << "," << p.mean << "," << p.variance << "\n";
    std::cout << "final mean " << traj.back().mean << ", variance " << traj.back().variance
              << " -> " << slc_out << "\n";
  });

  auto* slk = sl->add_subcommand("kl", "filtering vs distribution-shift KL check");
  std::string slk_config, slk_report = "kl_report.json", slk_projections;
  slk->add_option("--config", slk_config, "experiment config JSON")->required();
  slk->add_option("--report", slk_report);
  slk->add_option("--projections", slk_projections,
                  "CSV of 2-D input and output projections for the first seed");
  slk->callback([&]() {
    const ExperimentConfig ecfg = parse_config(read_file(slk_config));
    KlExperimentConfig kcfg;
    kcfg.problem = ecfg.problem;
    kcfg.target_spec = ecfg.target_spec();
    kcfg.target_train = ecfg.target_train;
    kcfg.shift = ecfg.shift;
    kcfg.generator_seed = ecfg.generator_seed;
    kcfg.pipeline = ecfg.pipeline;
    kcfg.filter_enabled = ecfg.filter_enabled;
    kcfg.seeds = ecfg.seeds;
    const KlInequalityReport rep = kl_inequality_experiment(kcfg);
    write_file(slk_report, rep.to_json());
    std::cout << rep.to_json() << "\n";
    if (!slk_projections.empty()) {
      const ShiftSnapshot snap = build_shift_snapshot(kcfg, kcfg.seeds.front());
      std::ofstream out(slk_projections);
      out << "source,label,x0,x1,out0,out1\n";
      auto dump = [&](const char* name, const Dataset& d, const Matrix& o) {
        for (std::size_t i = 0; i < d.size(); ++i) {
          out << name << "," << (d.samples[i].label ? *d.samples[i].label : -1) << ","
              << d.samples[i].features[0] << "," << d.samples[i].features[1] << ","
              << o.at(i, 0) << "," << o.at(i, 1) << "\n";
        }
      };
      dump("train", snap.train, snap.train_out);
      dump("generated", snap.generated, snap.generated_out);
      dump("filtered", snap.filtered, snap.filtered_out);
      std::cout << "projections -> " << slk_projections << "\n";
    }
  });

  // ---- serve ----
  auto* srv = app.add_subcommand("serve", "expose a target checkpoint over HTTP");
  std::string srv_checkpoint, srv_mode = "confidence", srv_host = "127.0.0.1";
  int srv_port = 8080;
  double srv_def_var = 0.0, srv_def_mean = 0.0;
  std::uint64_t srv_def_seed = 0;
  srv->add_option("--checkpoint", srv_checkpoint)->required();
  srv->add_option("--mode", srv_mode, "confidence or label");
  srv->add_option("--host", srv_host);
  srv->add_option("--port", srv_port);
  srv->add_option("--defense-variance", srv_def_var);
  srv->add_option("--defense-mean", srv_def_mean);
  srv->add_option("--defense-seed", srv_def_seed);
  srv->callback([&]() {
    auto target = open_target(srv_checkpoint, srv_mode, srv_def_var, srv_def_mean, srv_def_seed);
    TargetServer server(target);
    std::cout << "serving " << srv_checkpoint << " (" << srv_mode << ") on " << srv_host << ":"
              << srv_port << "\n";
    server.run(srv_host, srv_port);
  });

  // ---- run ----
  auto* rn = app.add_subcommand("run", "full pipeline from a config file");
  std::string rn_config;
  std::string rn_out_override;
  rn->add_option("--config", rn_config)->required();
  rn->add_option("--out-dir", rn_out_override, "override config output_dir");
  rn->callback([&]() {
    ExperimentConfig cfg = parse_config(read_file(rn_config));
    if (!rn_out_override.empty()) cfg.output_dir = rn_out_override;
    const RunOutcome outcome = run(cfg);
    std::cout << "manifest: " << cfg.output_dir << "/manifest.json ("
              << outcome.manifest.stages.size() << " stages)\n";
  });

  // ---- report ----
  auto* rp = app.add_subcommand("report", "summarize a finished run directory");
  std::string rp_dir;
  rp->add_option("--dir", rp_dir)->required();
  rp->callback([&]() {
    const std::string summary = read_file(rp_dir + "/summary.json");
    const auto j = nlohmann::json::parse(summary);
    std::cout << "run " << rp_dir << "\n";
    if (j.contains("mean")) {
      for (const auto& [k, v] : j["mean"].items()) {
        std::cout << "  " << k << ": " << v.dump() << "\n";
      }
    }
    const auto manifest = nlohmann::json::parse(read_file(rp_dir + "/manifest.json"));
    std::cout << "config hash " << manifest["config_hash"].get<std::string>() << ", "
              << manifest["stages"].size() << " stages";
    if (!manifest["failed_stage"].get<std::string>().empty()) {
      std::cout << ", FAILED at " << manifest["failed_stage"].get<std::string>();
    }
    std::cout << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
