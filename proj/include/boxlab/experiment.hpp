#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "boxlab/attacks.hpp"
#include "boxlab/dataset.hpp"
#include "boxlab/diffusion.hpp"
#include "boxlab/generator.hpp"
#include "boxlab/mlp.hpp"
#include "boxlab/pipeline.hpp"
#include "boxlab/target.hpp"

namespace boxlab {

inline constexpr const char* kToolVersion = "boxlab 0.1.0";

struct ExtractStage {
  bool enabled = true;
  std::vector<std::size_t> hidden{32};
  Activation activation = Activation::kRelu;
  TrainConfig train;
  double split_ratio = 0.8;
};

struct MiStage {
  bool enabled = false;
  std::vector<std::size_t> hidden{16};
  TrainConfig train;
  bool sort_confidence = true;
  std::vector<double> tpr_fpr_levels{0.01};
};

struct MiLabelOnlyStage {
  bool enabled = false;
  PipelineConfig probe;
  // NaN = calibrate tau as the median flip radius of freshly generated points.
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::size_t calibration_per_class = 25;
};

struct InvertStage {
  bool enabled = false;
  std::vector<std::size_t> hidden;  // empty = mirror of the target spec
  TrainConfig train;
};

struct InvertLabelOnlyStage {
  bool enabled = false;
  std::uint64_t seed = 0;
};

// Complete description of one experiment; everything an attack run needs,
// with every random decision pinned to a named seed. The default constructor
// assigns distinct seeds to every stage.
struct ExperimentConfig {
  ExperimentConfig();

  ProblemSpec problem;
  std::vector<std::size_t> target_hidden{32};
  Activation target_activation = Activation::kRelu;
  TrainConfig target_train;

  std::string generator_kind = "conditional_gaussian";  // random_noise | remote
  ShiftKnobs shift;
  std::uint64_t generator_seed = 0;
  double box_lo = -6.0;
  double box_hi = 6.0;
  std::string remote_host = "127.0.0.1";
  int remote_port = 0;

  PipelineConfig pipeline;
  bool filter_enabled = true;

  ExtractStage extract;
  MiStage mi;
  MiLabelOnlyStage mi_label_only;
  InvertStage invert;
  InvertLabelOnlyStage invert_label_only;

  std::optional<DefenseConfig> defense;

  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";

  MlpSpec target_spec() const;
  void validate() const;
};

// Strict JSON parsing: unknown keys are errors, so typos fail fast.
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical JSON form; changes iff any field changes.
std::string config_hash(const ExperimentConfig& cfg);

struct StageRecord {
  std::string name;
  std::vector<std::string> artifacts;
  double wall_ms = 0.0;
  std::uint64_t query_count_after = 0;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::vector<StageRecord> stages;
  std::string failed_stage;  // empty on success

  std::string to_json() const;
};

// Per-seed metric bundle collected by run().
struct SeedSummary {
  std::uint64_t seed = 0;
  ExtractionReport extract;
  MIReport mi;
  MIReport mi_label_only;
  InversionReport invert;
  bool has_extract = false, has_mi = false, has_mi_label = false, has_invert = false;
};

struct RunOutcome {
  RunManifest manifest;
  std::vector<SeedSummary> seeds;
};

// Executes the full pipeline for every seed: train target, generate, augment,
// filter, then the selected attacks; persists every stage artifact under
// output_dir. Reruns with the same config produce byte-identical reports.
// When a defense is configured, the attacker's pipeline queries go through
// the defended wrapper while extraction accuracy/agreement are still judged
// against the clean target.
RunOutcome run(const ExperimentConfig& config);

struct DefenseEvalReport {
  double agreement_without = 0.0, agreement_with = 0.0;
  double extraction_drop = 0.0;  // agreement_without - agreement_with
  double mi_auc_without = 0.0, mi_auc_with = 0.0;
  double mi_auc_drop = 0.0;

  std::string to_json() const;
};

// Runs the config without and with its defense block (seed means) and
// reports the degradation of extraction agreement vs membership AUC.
DefenseEvalReport defense_eval(const ExperimentConfig& config);

}  // namespace boxlab
