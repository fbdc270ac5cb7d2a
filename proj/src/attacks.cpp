#include "boxlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json.hpp"

namespace boxlab {

namespace {

Matrix dataset_matrix_checked(const Dataset& ds, std::size_t dim, const char* what) {
  if (ds.empty()) throw std::invalid_argument(std::string(what) + ": empty dataset");
  if (ds.dim != dim) throw ShapeError(std::string(what) + ": dataset dim mismatch");
  return ds.to_matrix();
}

}  // namespace

std::string ExtractionReport::to_json() const {
  nlohmann::json j{{"target_accuracy", target_accuracy},
                   {"stolen_accuracy", stolen_accuracy},
                   {"agreement", agreement},
                   {"query_count", query_count},
                   {"split_ratio", split_ratio},
                   {"train_seed", train_seed}};
  return j.dump(2);
}

ExtractionReport score_extraction(Target& target, const MlpSpec& stolen_spec,
                                  const MlpParams& stolen_params, const Dataset& eval_set) {
  const Matrix eval_x = dataset_matrix_checked(eval_set, target.dim(), "extract");
  const std::vector<int> eval_y = eval_set.labels();
  const std::vector<int> target_pred = target.query_label(eval_x);
  const std::vector<int> stolen_pred = argmax_rows(forward(stolen_params, stolen_spec, eval_x));

  ExtractionReport rep;
  rep.target_accuracy = metrics::accuracy(target_pred, eval_y);
  rep.stolen_accuracy = metrics::accuracy(stolen_pred, eval_y);
  rep.agreement = metrics::agreement(target_pred, stolen_pred);
  rep.query_count = target.query_count();
  return rep;
}

ExtractionResult extract(Target& target, const Dataset& d_aux_hat, const MlpSpec& stolen_spec,
                         const TrainConfig& train_cfg, double split_ratio,
                         const Dataset& eval_set) {
  if (d_aux_hat.empty()) throw std::invalid_argument("extract: empty attack dataset");
  if (eval_set.empty()) throw std::invalid_argument("extract: empty eval set");

  ExtractionResult res;
  res.stolen_spec = stolen_spec;

  SplitResult parts = split(d_aux_hat, split_ratio, Rng::mix(train_cfg.seed, 0x53504c49ULL));
  res.train_split = std::move(parts.first);
  res.test_split = std::move(parts.second);

  TrainResult trained = train(res.train_split, stolen_spec, train_cfg);
  res.stolen_params = std::move(trained.params);

  res.report = score_extraction(target, stolen_spec, res.stolen_params, eval_set);
  res.report.split_ratio = split_ratio;
  res.report.train_seed = train_cfg.seed;
  return res;
}

std::vector<double> mi_features(const double* confidence, int classes, int label, bool sorted) {
  std::vector<double> row(2 * static_cast<std::size_t>(classes), 0.0);
  std::copy(confidence, confidence + classes, row.begin());
  if (sorted) std::sort(row.begin(), row.begin() + classes, std::greater<>());
  row[static_cast<std::size_t>(classes) + static_cast<std::size_t>(label)] = 1.0;
  return row;
}

namespace {

Matrix mi_feature_matrix(const Matrix& confidences, const std::vector<int>& labels,
                         bool sorted) {
  const int classes = static_cast<int>(confidences.cols);
  Matrix out(confidences.rows, 2 * confidences.cols);
  for (std::size_t i = 0; i < confidences.rows; ++i) {
    const auto row = mi_features(confidences.row(i), classes, labels[i], sorted);
    std::copy(row.begin(), row.end(), out.row(i));
  }
  return out;
}

}  // namespace

TrainResult mi_train_attack(const MlpSpec& shadow_spec, const MlpParams& shadow_params,
                            const Dataset& shadow_train, const Dataset& shadow_test,
                            const MlpSpec& attack_spec, const TrainConfig& train_cfg,
                            const MiOptions& options) {
  if (shadow_train.empty() || shadow_test.empty())
    throw std::invalid_argument("mi_train_attack: both splits must be nonempty");
  const int classes = static_cast<int>(shadow_spec.output_dim());
  if (attack_spec.input_dim() != 2 * static_cast<std::size_t>(classes))
    throw ShapeError("mi_train_attack: attack model input dim must be 2*C");
  if (attack_spec.output_dim() != 1 || attack_spec.output_head != OutputHead::kLinear)
    throw ConfigError("mi_train_attack: attack model needs a width-1 linear head");

  const Matrix in_conf = forward(shadow_params, shadow_spec, shadow_train.to_matrix());
  const Matrix out_conf = forward(shadow_params, shadow_spec, shadow_test.to_matrix());
  const Matrix in_feat = mi_feature_matrix(in_conf, shadow_train.labels(), options.sort_confidence);
  const Matrix out_feat = mi_feature_matrix(out_conf, shadow_test.labels(), options.sort_confidence);

  Matrix x(in_feat.rows + out_feat.rows, in_feat.cols);
  std::vector<int> y(x.rows, 0);
  for (std::size_t i = 0; i < in_feat.rows; ++i) {
    std::copy(in_feat.row(i), in_feat.row(i) + in_feat.cols, x.row(i));
    y[i] = 1;  // member
  }
  for (std::size_t i = 0; i < out_feat.rows; ++i) {
    std::copy(out_feat.row(i), out_feat.row(i) + out_feat.cols, x.row(in_feat.rows + i));
  }

  TrainConfig cfg = train_cfg;
  cfg.loss = Loss::kBinaryCrossEntropy;
  return train(x, TrainTargets::classes(std::move(y)), attack_spec, cfg);
}

std::string MIReport::to_json() const {
  nlohmann::json j{{"accuracy", accuracy}, {"f1", f1}, {"auc", auc}, {"threshold", threshold}};
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [level, tpr] : tpr_at_fpr) t[std::to_string(level)] = tpr;
  j["tpr_at_fpr"] = t;
  return j.dump(2);
}

namespace {

std::vector<double> attack_scores(const MlpSpec& attack_spec, const MlpParams& attack_params,
                                  Target& target, const Dataset& pool, const MiOptions& options) {
  const Matrix conf = target.query_confidence(pool.to_matrix());
  const Matrix feats = mi_feature_matrix(conf, pool.labels(), options.sort_confidence);
  const Matrix logits = forward(attack_params, attack_spec, feats);
  std::vector<double> scores(logits.rows);
  for (std::size_t i = 0; i < logits.rows; ++i) scores[i] = sigmoid(logits.at(i, 0));
  return scores;
}

MIReport score_report(const std::vector<double>& member_scores,
                      const std::vector<double>& nonmember_scores, double threshold,
                      const std::vector<double>& levels) {
  MIReport rep;
  rep.threshold = threshold;
  std::vector<int> preds, labels;
  for (double s : member_scores) {
    preds.push_back(s >= threshold ? 1 : 0);
    labels.push_back(1);
  }
  for (double s : nonmember_scores) {
    preds.push_back(s >= threshold ? 1 : 0);
    labels.push_back(0);
  }
  rep.accuracy = metrics::accuracy(preds, labels);
  rep.f1 = metrics::f1(preds, labels, 1);
  metrics::ScoredOutcomes outcomes{member_scores, nonmember_scores};
  rep.auc = metrics::roc_auc(outcomes);
  for (double level : levels) rep.tpr_at_fpr[level] = metrics::tpr_at_fpr(outcomes, level);
  return rep;
}

}  // namespace

MIReport mi_evaluate(const MlpSpec& attack_spec, const MlpParams& attack_params, Target& target,
                     const Dataset& member_eval, const Dataset& nonmember_eval,
                     const MiOptions& options) {
  if (member_eval.empty() || nonmember_eval.empty())
    throw std::invalid_argument("mi_evaluate: empty eval set");
  const auto pos = attack_scores(attack_spec, attack_params, target, member_eval, options);
  const auto neg = attack_scores(attack_spec, attack_params, target, nonmember_eval, options);
  return score_report(pos, neg, 0.5, options.tpr_fpr_levels);
}

double flip_radius(Target& target, const std::vector<double>& x, const PipelineConfig& probe_cfg,
                   Rng rng) {
  probe_cfg.validate();
  Matrix self(1, x.size());
  std::copy(x.begin(), x.end(), self.row(0));
  const int base_label = target.query_label(self)[0];

  std::vector<double> probe;
  for (std::size_t round = 0; round < probe_cfg.max_rounds; ++round) {
    const double inner = round == 0 ? 0.0 : probe_cfg.delta0 + (round - 1) * probe_cfg.step;
    const double outer = probe_cfg.delta0 + round * probe_cfg.step;
    Matrix probes(probe_cfg.shell_samples, x.size());
    for (std::size_t i = 0; i < probe_cfg.shell_samples; ++i) {
      const double r = rng.uniform_open_lo(inner, outer);
      double norm = 0.0;
      probe.resize(x.size());
      do {
        for (double& v : probe) v = rng.normal();
        norm = norm_p(probe, probe_cfg.norm_order);
      } while (norm == 0.0);
      for (std::size_t k = 0; k < x.size(); ++k)
        probes.at(i, k) = x[k] + r * probe[k] / norm;
    }
    const std::vector<int> labels = target.query_label(probes);
    if (std::any_of(labels.begin(), labels.end(), [&](int l) { return l != base_label; }))
      return outer;
  }
  return probe_cfg.search_bound();
}

double flip_radius(Target& target, const std::vector<double>& x, const PipelineConfig& probe_cfg) {
  return flip_radius(target, x, probe_cfg, Rng(probe_cfg.seed));
}

std::vector<double> flip_radii(Target& target, const Dataset& points,
                               const PipelineConfig& probe_cfg) {
  std::vector<double> radii(points.size(), 0.0);
  Rng root(probe_cfg.seed);
  const bool parallel = target.stateless_queries();
  const std::int64_t n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    radii[i] = flip_radius(target, points.samples[i].features, probe_cfg,
                           root.child(static_cast<std::uint64_t>(i)));
  }
  return radii;
}

bool mi_label_only(Target& target, const std::vector<double>& x, double tau,
                   const PipelineConfig& probe_cfg) {
  return flip_radius(target, x, probe_cfg) >= tau;
}

double median_flip_radius(Target& target, const Dataset& reference,
                          const PipelineConfig& probe_cfg) {
  if (reference.empty()) throw std::invalid_argument("median_flip_radius: empty reference");
  std::vector<double> radii = flip_radii(target, reference, probe_cfg);
  std::sort(radii.begin(), radii.end());
  const std::size_t n = radii.size();
  return n % 2 == 1 ? radii[n / 2] : 0.5 * (radii[n / 2 - 1] + radii[n / 2]);
}

MIReport mi_label_only_evaluate(Target& target, const Dataset& member_eval,
                                const Dataset& nonmember_eval, double tau,
                                const PipelineConfig& probe_cfg, const MiOptions& options) {
  if (member_eval.empty() || nonmember_eval.empty())
    throw std::invalid_argument("mi_label_only_evaluate: empty eval set");
  std::vector<double> pos = flip_radii(target, member_eval, probe_cfg);
  std::vector<double> neg = flip_radii(target, nonmember_eval, probe_cfg);
  return score_report(pos, neg, tau, options.tpr_fpr_levels);
}

MlpSpec default_inversion_spec(const MlpSpec& target_like_spec) {
  return target_like_spec.mirrored(OutputHead::kLinear);
}

TrainResult inversion_train(Target& target, const Dataset& d_aux_hat, const MlpSpec& inv_spec,
                            const TrainConfig& train_cfg) {
  if (d_aux_hat.empty()) throw std::invalid_argument("inversion_train: empty dataset");
  if (inv_spec.input_dim() != static_cast<std::size_t>(target.classes()) ||
      inv_spec.output_dim() != target.dim())
    throw ShapeError("inversion_train: inversion model must map C -> d");

  const Matrix x = d_aux_hat.to_matrix();
  const Matrix conf = target.query_confidence(x);  // throws on label-only targets
  TrainConfig cfg = train_cfg;
  cfg.loss = Loss::kMse;
  return train(conf, TrainTargets::values(x), inv_spec, cfg);
}

std::string InversionReport::to_json() const {
  nlohmann::json j{{"mse", mse}, {"accuracy", accuracy}};
  return j.dump(2);
}

InversionReport inversion_evaluate(const MlpSpec& inv_spec, const MlpParams& inv_params,
                                   Target& target, const Dataset& originals) {
  if (originals.empty()) throw std::invalid_argument("inversion_evaluate: empty originals");
  const Matrix x = originals.to_matrix();
  const std::vector<int> y = originals.labels();
  const Matrix conf = target.query_confidence(x);
  const Matrix recon = forward(inv_params, inv_spec, conf);

  InversionReport rep;
  rep.mse = metrics::mse(x, recon);
  const std::vector<int> recls = target.query_label(recon);
  rep.accuracy = metrics::accuracy(recls, y);
  return rep;
}

Sample label_only_invert(const Dataset& d_aux_hat, int class_id, std::uint64_t seed) {
  const auto idx = d_aux_hat.class_indices(class_id);
  if (idx.empty())
    throw std::invalid_argument("label_only_invert: class " + std::to_string(class_id) +
                                " is empty");
  Rng rng(seed);
  return d_aux_hat.samples[idx[rng.uniform_int(idx.size())]];
}

}  // namespace boxlab
