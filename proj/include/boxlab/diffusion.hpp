#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boxlab/dataset.hpp"
#include "boxlab/generator.hpp"
#include "boxlab/metrics.hpp"
#include "boxlab/pipeline.hpp"
#include "boxlab/rng.hpp"
#include "boxlab/target.hpp"

namespace boxlab {

// Per-step noise parameters of the toy diffusion; alpha_bar is the running
// product and sigma defaults to sqrt(1 - alpha_t).
struct VarianceSchedule {
  std::vector<double> alphas;      // alpha_t, t = 1..T
  std::vector<double> alpha_bars;  // cumulative products
  std::vector<double> sigmas;

  std::size_t steps() const { return alphas.size(); }
  void validate() const;
};

// Linear alpha ramp from alpha_start down to alpha_end.
VarianceSchedule linear_alpha_schedule(std::size_t steps, double alpha_start, double alpha_end);

// Default: T=100, alpha from 0.9999 to 0.91, which drives alpha_bar_T below
// 0.01 so chains can start from a standard normal.
VarianceSchedule default_schedule();

// Isotropic Gaussian data; with this family the minimum-MSE noise predictor
// has a closed form, which isolates the stochastic reverse term from any
// approximator error.
struct GaussianDataSpec {
  std::vector<double> mean;
  double stddev = 1.0;
};

// x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps, the closed form of composing
// the per-step forward kernels. t=0 returns x0 unchanged (alpha_bar_0 = 1).
std::vector<double> forward_sample(const std::vector<double>& x0, std::size_t t,
                                   const VarianceSchedule& schedule, Rng& rng);

// Exact conditional expectation E[eps | x_t] for x0 ~ N(m, s^2 I):
//   eps_hat = sqrt(1-abar_t) (x_t - sqrt(abar_t) m) / (abar_t s^2 + 1 - abar_t).
std::vector<double> analytic_eps(const std::vector<double>& x_t, std::size_t t,
                                 const VarianceSchedule& schedule, const GaussianDataSpec& data);

// One reverse update:
//   x_{t-1} = (x_t - (1-a_t)/sqrt(1-abar_t) eps_hat(x_t)) / sqrt(a_t)  [+ sigma_t xi]
std::vector<double> reverse_step(const std::vector<double>& x_t, std::size_t t,
                                 const VarianceSchedule& schedule, const GaussianDataSpec& data,
                                 bool stochastic, Rng& rng);

// Full chain from x_T down to x_0.
std::vector<double> run_reverse_chain(std::vector<double> x_T, const VarianceSchedule& schedule,
                                      const GaussianDataSpec& data, bool stochastic, Rng& rng);

struct ChainEnsembleStats {
  std::vector<double> mean;       // per-dim mean of final samples
  std::vector<double> variance;   // per-dim population variance
};

// n independent chains started from N(0, I), one seed-derived stream each;
// chains run in parallel without changing any individual trajectory.
ChainEnsembleStats run_chain_ensemble(std::size_t n_chains, const VarianceSchedule& schedule,
                                      const GaussianDataSpec& data, bool stochastic,
                                      std::uint64_t seed);

struct TrajectoryPoint {
  std::size_t t = 0;
  double mean = 0.0;
  double variance = 0.0;
};

// Cross-chain stats of coordinate 0 at every step from t=T down to 0.
std::vector<TrajectoryPoint> reverse_trajectory_stats(std::size_t n_chains,
                                                      const VarianceSchedule& schedule,
                                                      const GaussianDataSpec& data,
                                                      bool stochastic, std::uint64_t seed);

struct KlSeedOutcome {
  std::uint64_t seed = 0;
  double kl_train_vs_gen = 0.0;       // before filtering
  double kl_train_vs_filtered = 0.0;  // after filtering
  bool ordering_holds = false;
  bool degenerate_filter = false;  // filtering emptied a class
};

struct KlInequalityReport {
  std::vector<KlSeedOutcome> per_seed;
  double fraction_ordered = 0.0;

  std::string to_json() const;
};

struct KlExperimentConfig {
  ProblemSpec problem;
  MlpSpec target_spec;
  TrainConfig target_train;
  ShiftKnobs shift;
  std::uint64_t generator_seed = 0;
  PipelineConfig pipeline;
  metrics::HistogramSpec histogram;
  bool filter_enabled = true;
  std::vector<std::uint64_t> seeds;
};

// End-to-end check of the filtering claim: per seed, build the generated
// dataset (steps 1-2), filter it (step 3), and compare the KL divergences
// between the training distribution and each generated distribution, all
// estimated on the target's output vectors.
KlInequalityReport kl_inequality_experiment(const KlExperimentConfig& cfg);

// One seed of the same construction with the datasets and their output-space
// images kept, for scatter-plot exports.
struct ShiftSnapshot {
  Dataset train, generated, filtered;
  Matrix train_out, generated_out, filtered_out;
  bool degenerate_filter = false;
};

ShiftSnapshot build_shift_snapshot(const KlExperimentConfig& cfg, std::uint64_t seed);

}  // namespace boxlab
