#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "boxlab/dataset.hpp"
#include "boxlab/rng.hpp"

namespace boxlab {

// Controllable gap between the generated distribution and the real one:
// class variance shrinks by rho and class means shift by eta * sigma along a
// fixed per-class random unit direction.
struct ShiftKnobs {
  double variance_ratio = 0.5;    // rho
  double mean_offset_scale = 0.5; // eta
  std::uint64_t offset_seed = 0;

  void validate() const;
};

// Per-class sample source standing in for a conditional generative model.
// Emitted samples always carry the requested class label; whether the target
// agrees is the pipeline's problem, not the generator's.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual std::size_t dim() const = 0;
  virtual int classes() const = 0;
  virtual std::string kind() const = 0;

  // n samples labeled c. Each (class, call-index) pair draws from its own
  // seed-derived stream, so per-class work can run on any schedule and still
  // reproduce the serial result. Calls for one class must not race each other.
  virtual Dataset generate(int class_id, std::size_t n);

 protected:
  explicit Generator(std::uint64_t seed, int classes)
      : root_rng_(seed), calls_per_class_(classes, 0) {}
  virtual void fill_sample(int class_id, Rng& rng, std::vector<double>& out) = 0;

  Rng stream_for(int class_id);
  // Stream family 0 is reserved for non-class draws (the baseline sampler);
  // per-class streams use family class_id + 1.
  Rng stream_raw(std::uint64_t family, std::uint64_t call) {
    return root_rng_.child(Rng::mix(family, call));
  }

 private:
  Rng root_rng_;
  std::vector<std::uint64_t> calls_per_class_;
};

class ConditionalGaussianGenerator : public Generator {
 public:
  // prototypes: one mean per class (usually the problem's class means, which
  // models an adversary who knows what each class looks like).
  ConditionalGaussianGenerator(std::vector<std::vector<double>> prototypes, double true_std,
                               ShiftKnobs knobs, std::uint64_t seed);

  std::size_t dim() const override { return prototypes_.empty() ? 0 : prototypes_[0].size(); }
  int classes() const override { return static_cast<int>(prototypes_.size()); }
  std::string kind() const override { return "conditional_gaussian"; }

  // The shifted mean actually sampled for a class (prototype + eta*sigma*u_c).
  const std::vector<double>& shifted_mean(int class_id) const { return shifted_means_[class_id]; }

 protected:
  void fill_sample(int class_id, Rng& rng, std::vector<double>& out) override;

 private:
  std::vector<std::vector<double>> prototypes_;
  double true_std_;
  ShiftKnobs knobs_;
  std::vector<std::vector<double>> shifted_means_;
};

// Uniform box sampler; the random-search baseline.
class RandomNoiseGenerator : public Generator {
 public:
  RandomNoiseGenerator(std::size_t dim, int classes, double box_lo, double box_hi,
                       std::uint64_t seed);

  std::size_t dim() const override { return dim_; }
  int classes() const override { return classes_; }
  std::string kind() const override { return "random_noise"; }

  // n unlabeled box samples; the caller assigns labels by querying the target.
  Dataset random_noise_baseline(std::size_t n);

 protected:
  void fill_sample(int class_id, Rng& rng, std::vector<double>& out) override;

 private:
  std::size_t dim_;
  int classes_;
  double lo_, hi_;
  std::uint64_t baseline_calls_ = 0;
};

}  // namespace boxlab
