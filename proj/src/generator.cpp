#include "boxlab/generator.hpp"

#include <cmath>

namespace boxlab {

void ShiftKnobs::validate() const {
  if (variance_ratio <= 0.0) throw ConfigError("shift: variance_ratio must be > 0");
  if (mean_offset_scale < 0.0) throw ConfigError("shift: mean_offset_scale must be >= 0");
}

Rng Generator::stream_for(int class_id) {
  const std::uint64_t call = calls_per_class_[class_id]++;
  return stream_raw(static_cast<std::uint64_t>(class_id) + 1, call);
}

Dataset Generator::generate(int class_id, std::size_t n) {
  if (class_id < 0 || class_id >= classes())
    throw std::invalid_argument("generate: unknown class " + std::to_string(class_id));
  Rng rng = stream_for(class_id);
  Dataset out;
  out.dim = dim();
  out.class_count = classes();
  std::vector<double> x(dim());
  for (std::size_t i = 0; i < n; ++i) {
    fill_sample(class_id, rng, x);
    out.add(x, class_id);
  }
  return out;
}

ConditionalGaussianGenerator::ConditionalGaussianGenerator(
    std::vector<std::vector<double>> prototypes, double true_std, ShiftKnobs knobs,
    std::uint64_t seed)
    : Generator(seed, static_cast<int>(prototypes.size())),
      prototypes_(std::move(prototypes)),
      true_std_(true_std),
      knobs_(knobs) {
  knobs_.validate();
  if (true_std_ <= 0.0) throw ConfigError("generator: true_std must be > 0");
  // Fixed per-class unit offsets: the shifted mean is a property of the
  // generator's lifetime, not of any individual call.
  Rng offset_rng(knobs_.offset_seed);
  for (std::size_t c = 0; c < prototypes_.size(); ++c) {
    Rng crng = offset_rng.child(c);
    std::vector<double> u(prototypes_[c].size());
    double norm = 0.0;
    for (double& v : u) {
      v = crng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    std::vector<double> mean = prototypes_[c];
    for (std::size_t k = 0; k < u.size(); ++k) {
      mean[k] += knobs_.mean_offset_scale * true_std_ * (norm > 0.0 ? u[k] / norm : 0.0);
    }
    shifted_means_.push_back(std::move(mean));
  }
}

void ConditionalGaussianGenerator::fill_sample(int class_id, Rng& rng, std::vector<double>& out) {
  const auto& mean = shifted_means_[class_id];
  const double stddev = knobs_.variance_ratio * true_std_;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = rng.normal(mean[k], stddev);
}

RandomNoiseGenerator::RandomNoiseGenerator(std::size_t dim, int classes, double box_lo,
                                           double box_hi, std::uint64_t seed)
    : Generator(seed, classes), dim_(dim), classes_(classes), lo_(box_lo), hi_(box_hi) {
  if (!(lo_ < hi_)) throw ConfigError("generator: box_lo must be < box_hi");
}

void RandomNoiseGenerator::fill_sample(int /*class_id*/, Rng& rng, std::vector<double>& out) {
  for (double& v : out) v = rng.uniform(lo_, hi_);
}

Dataset RandomNoiseGenerator::random_noise_baseline(std::size_t n) {
  Rng rng = stream_raw(0, baseline_calls_++);
  Dataset out;
  out.dim = dim_;
  out.class_count = classes_;
  std::vector<double> x(dim_);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = rng.uniform(lo_, hi_);
    out.add(x, std::nullopt);
  }
  return out;
}

}  // namespace boxlab
