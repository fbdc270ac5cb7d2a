#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boxlab/matrix.hpp"
#include "boxlab/rng.hpp"

namespace boxlab {

// One feature vector with an optional class id.
struct Sample {
  std::vector<double> features;
  std::optional<int> label;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t dim = 0;
  int class_count = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  void add(std::vector<double> features, std::optional<int> label);

  // Samples stacked as rows.
  Matrix to_matrix() const;

  // Labels of all samples; throws if any sample is unlabeled.
  std::vector<int> labels() const;

  // Indices of samples with the given label.
  std::vector<std::size_t> class_indices(int label) const;

  // Sorted list of class ids that actually occur.
  std::vector<int> present_classes() const;
};

// Synthetic benchmark: C Gaussian clusters whose means sit evenly spaced on
// a radius-R circle embedded in the first two feature dimensions. Overlap,
// boundary distances and Bayes accuracy are all known in closed form.
struct ProblemSpec {
  int class_count = 4;
  std::size_t dim = 8;
  double circle_radius = 3.0;
  // Optional explicit means; when empty the circle layout is used.
  std::vector<std::vector<double>> class_means;
  double class_std = 1.0;
  std::size_t train_size = 400;
  std::size_t member_eval_size = 200;
  std::size_t nonmember_eval_size = 200;
  std::uint64_t seed = 0;

  void validate() const;
  // The effective per-class mean vectors (explicit ones or the circle layout).
  std::vector<std::vector<double>> means() const;
};

struct Problem {
  Dataset train;
  // Literal reuse of training points: membership ground truth is w.r.t. train.
  Dataset member_eval;
  // Fresh draws from the same mixture, disjoint from train.
  Dataset nonmember_eval;
};

Problem make_problem(const ProblemSpec& spec);

// Per-class stratified split; first part receives round(ratio * n_c) of each
// class. A class with a single sample goes whole to the larger side and is
// reported through the returned warning list.
struct SplitResult {
  Dataset first;
  Dataset second;
  std::vector<int> degenerate_classes;
};

SplitResult split(const Dataset& dataset, double ratio, std::uint64_t seed);

// CSV with header `label,f0,...,f{d-1}`; empty label field = unlabeled row.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& dataset, const std::string& path);

}  // namespace boxlab
