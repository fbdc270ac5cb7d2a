#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "boxlab/dataset.hpp"
#include "boxlab/generator.hpp"
#include "boxlab/target.hpp"

namespace boxlab {

enum class NormOrder { kL1 = 1, kL2 = 2, kLinf = 999 };

double norm_p(const std::vector<double>& v, NormOrder p);

// Knobs of the three-step data construction. delta0 is the first probing
// radius, step the per-round increment, shell_samples the probes per round.
struct PipelineConfig {
  std::size_t per_class_n = 50;
  double delta0 = 0.3;
  double step = 0.3;             // epsilon
  std::size_t shell_samples = 20;  // N
  NormOrder norm_order = NormOrder::kL2;
  std::size_t max_rounds = 64;
  std::size_t anchors_per_class = 1;  // m
  std::size_t max_generate_attempts = 5;  // multiplier on per_class_n
  double filter_sigma = 3.0;
  bool filter_two_sided = true;
  bool parallel_classes = true;
  std::uint64_t seed = 0;

  void validate() const;
  // Largest distance any retained probe can have from its anchor.
  double search_bound() const {
    return delta0 + static_cast<double>(max_rounds) * step;
  }
};

struct Step1Report {
  std::map<int, std::size_t> kept_per_class;
  std::map<int, std::size_t> discarded_per_class;
};

struct Step1Result {
  Dataset data;  // D_a
  Step1Report report;
};

// Step 1: per class, draw from the generator and keep only samples the
// target classifies as that class. Gives up on a class after
// max_generate_attempts * per_class_n draws; zero survivors is an error.
Step1Result step1_generate(Target& target, Generator& generator, const PipelineConfig& cfg);

// Random-search baseline: box noise labeled by whatever the target says,
// so nothing is discarded. Total size = per_class_n * classes.
Step1Result step1_random_baseline(Target& target, RandomNoiseGenerator& generator,
                                  const PipelineConfig& cfg);

struct AugmentReport {
  std::map<int, std::size_t> added_per_class;
  // Rounds retained per anchor, keyed by (class, anchor index).
  std::map<std::pair<int, int>, std::size_t> rounds_per_anchor;
};

struct AugmentResult {
  Dataset data;  // D_aux = D_a plus every retained probe
  AugmentReport report;
};

// Step 2: boundary-probing augmentation. Per anchor, round i draws
// shell_samples points at norm-p radius in (delta_{i-1}, delta_i] around the
// anchor (delta_{-1} = 0, delta_i = delta0 + i*step) and queries their labels
// in one batch. A round containing any foreign label is discarded whole and
// ends that anchor; clean rounds are added with the anchor's class label.
// Classes run in parallel on their own seed-derived streams when the target
// is pure; the schedule never changes the result.
AugmentResult augment(Target& target, const Dataset& d_a, const PipelineConfig& cfg);

struct FilterPairStats {
  int centroid_class = 0;
  int other_class = 0;
  double mean_distance = 0.0;
  double std_distance = 0.0;  // population std
  std::size_t flagged = 0;
};

struct FilterReport {
  std::vector<FilterPairStats> pairs;
  std::vector<std::size_t> removed_ids;  // indices into the input dataset
  std::map<int, std::size_t> kept_per_class;

  std::string to_json() const;
};

struct FilterResult {
  Dataset data;  // filtered D_aux
  FilterReport report;
};

// Step 3: inter-class filtering. Class centroids are means of the target's
// output vectors; a class-k sample is flagged against centroid i when its
// L2 distance to Cen_i deviates from that pair's mean by more than
// filter_sigma population standard deviations. Flagged-by-any-pair samples
// are removed in a single pass. Pairs with fewer than 2 samples or zero
// distance spread flag nothing.
FilterResult filter(Target& target, const Dataset& d_aux, const PipelineConfig& cfg);

// The three-sigma core, exposed for direct use: flags[i] is set when
// |d_i - mean| > sigma_factor * population_std (or one-sided upper tail).
std::vector<bool> three_sigma_outliers(const std::vector<double>& distances, double sigma_factor,
                                       bool two_sided);

}  // namespace boxlab
