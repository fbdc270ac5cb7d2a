#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "boxlab/dataset.hpp"
#include "boxlab/metrics.hpp"
#include "boxlab/mlp.hpp"
#include "boxlab/pipeline.hpp"
#include "boxlab/target.hpp"

namespace boxlab {

struct ExtractionReport {
  double target_accuracy = 0.0;
  double stolen_accuracy = 0.0;
  double agreement = 0.0;
  std::uint64_t query_count = 0;  // target handle total after the run
  double split_ratio = 0.0;
  std::uint64_t train_seed = 0;

  std::string to_json() const;
};

struct ExtractionResult {
  MlpParams stolen_params;
  MlpSpec stolen_spec;
  ExtractionReport report;
  Dataset train_split;  // the D_aux_hat halves, reused by the MI attack
  Dataset test_split;
};

// Accuracy of both models on the eval set plus the fraction of points where
// their predicted classes coincide.
ExtractionReport score_extraction(Target& target, const MlpSpec& stolen_spec,
                                  const MlpParams& stolen_params, const Dataset& eval_set);

// Train a substitute on a stratified split of the filtered dataset and score
// it against the target on an evaluation set from the true problem.
// Training uses hard labels, so it works identically in label-only mode.
ExtractionResult extract(Target& target, const Dataset& d_aux_hat, const MlpSpec& stolen_spec,
                         const TrainConfig& train_cfg, double split_ratio,
                         const Dataset& eval_set);

struct MiOptions {
  bool sort_confidence = true;  // sort scores descending before encoding
  std::vector<double> tpr_fpr_levels{0.01};
};

// Feature row for the attack model: the confidence vector (optionally sorted
// descending) concatenated with a one-hot of the true label. Always 2C wide.
std::vector<double> mi_features(const double* confidence, int classes, int label, bool sorted);

// Train the membership attack model on the shadow model's confidence
// vectors: shadow-train samples labeled "in", shadow-test samples "out".
TrainResult mi_train_attack(const MlpSpec& shadow_spec, const MlpParams& shadow_params,
                            const Dataset& shadow_train, const Dataset& shadow_test,
                            const MlpSpec& attack_spec, const TrainConfig& train_cfg,
                            const MiOptions& options = {});

struct MIReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  std::map<double, double> tpr_at_fpr;
  double threshold = 0.5;

  std::string to_json() const;
};

// Score member/non-member pools with the attack model applied to the
// *target's* confidence vectors; 0.5 decides accuracy and F1.
MIReport mi_evaluate(const MlpSpec& attack_spec, const MlpParams& attack_params, Target& target,
                     const Dataset& member_eval, const Dataset& nonmember_eval,
                     const MiOptions& options = {});

// Smallest probing radius delta_i at which any of the shell samples around x
// flips the target's predicted label; the search bound
// delta0 + max_rounds*step when nothing flips.
double flip_radius(Target& target, const std::vector<double>& x, const PipelineConfig& probe_cfg,
                   Rng rng);
double flip_radius(Target& target, const std::vector<double>& x, const PipelineConfig& probe_cfg);

// Radii for a whole dataset, one seed-derived stream per point. Runs points
// in parallel when the target is pure; the schedule does not change results.
std::vector<double> flip_radii(Target& target, const Dataset& points,
                               const PipelineConfig& probe_cfg);

// Label-only membership call: member iff flip_radius(x) >= tau.
bool mi_label_only(Target& target, const std::vector<double>& x, double tau,
                   const PipelineConfig& probe_cfg);

// Calibration helper for tau: median flip radius over a reference pool
// (typically freshly generated non-members).
double median_flip_radius(Target& target, const Dataset& reference,
                          const PipelineConfig& probe_cfg);

// Label-only MI over full pools; radii double as ranking scores.
MIReport mi_label_only_evaluate(Target& target, const Dataset& member_eval,
                                const Dataset& nonmember_eval, double tau,
                                const PipelineConfig& probe_cfg,
                                const MiOptions& options = {});

// Decoder from the target's confidence vectors back to inputs, trained on
// (T(x), x) pairs with mse.
TrainResult inversion_train(Target& target, const Dataset& d_aux_hat, const MlpSpec& inv_spec,
                            const TrainConfig& train_cfg);

// Mirror of the target's architecture with widths reversed and linear head.
MlpSpec default_inversion_spec(const MlpSpec& target_like_spec);

struct InversionReport {
  double mse = 0.0;
  double accuracy = 0.0;

  std::string to_json() const;
};

// One-to-one reconstruction: x_hat = I(T(x)); mse against the originals and
// the fraction of reconstructions the target puts back into the right class.
InversionReport inversion_evaluate(const MlpSpec& inv_spec, const MlpParams& inv_params,
                                   Target& target, const Dataset& originals);

// Label-only inversion: a uniformly random member of the class, deterministic
// under the seed.
Sample label_only_invert(const Dataset& d_aux_hat, int class_id, std::uint64_t seed);

}  // namespace boxlab
