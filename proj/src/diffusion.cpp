#include "boxlab/diffusion.hpp"

#include <cmath>
#include <cstdint>

#include "json.hpp"

namespace boxlab {

void VarianceSchedule::validate() const {
  if (alphas.empty()) throw ConfigError("schedule: empty");
  if (alpha_bars.size() != alphas.size() || sigmas.size() != alphas.size())
    throw ConfigError("schedule: inconsistent lengths");
  double prev = 1.0;
  for (std::size_t t = 0; t < alphas.size(); ++t) {
    if (!(alphas[t] > 0.0 && alphas[t] < 1.0))
      throw ConfigError("schedule: alphas must lie in (0,1)");
    if (!(alpha_bars[t] > 0.0 && alpha_bars[t] < 1.0 && alpha_bars[t] < prev))
      throw ConfigError("schedule: alpha_bars must be strictly decreasing in (0,1)");
    prev = alpha_bars[t];
  }
}

VarianceSchedule linear_alpha_schedule(std::size_t steps, double alpha_start, double alpha_end) {
  if (steps < 1) throw ConfigError("schedule: steps must be >= 1");
  VarianceSchedule s;
  double bar = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(steps - 1);
    const double a = alpha_start + (alpha_end - alpha_start) * frac;
    bar *= a;
    s.alphas.push_back(a);
    s.alpha_bars.push_back(bar);
    s.sigmas.push_back(std::sqrt(1.0 - a));
  }
  s.validate();
  return s;
}

VarianceSchedule default_schedule() { return linear_alpha_schedule(100, 0.9999, 0.91); }

namespace {

void check_t(std::size_t t, const VarianceSchedule& schedule) {
  if (t < 1 || t > schedule.steps())
    throw std::invalid_argument("diffusion: t must be in [1, T]");
}

}  // namespace

std::vector<double> forward_sample(const std::vector<double>& x0, std::size_t t,
                                   const VarianceSchedule& schedule, Rng& rng) {
  if (t == 0) return x0;  // alpha_bar_0 = 1 by convention
  check_t(t, schedule);
  const double abar = schedule.alpha_bars[t - 1];
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  std::vector<double> out(x0.size());
  for (std::size_t k = 0; k < x0.size(); ++k) out[k] = a * x0[k] + b * rng.normal();
  return out;
}

std::vector<double> analytic_eps(const std::vector<double>& x_t, std::size_t t,
                                 const VarianceSchedule& schedule, const GaussianDataSpec& data) {
  check_t(t, schedule);
  if (x_t.size() != data.mean.size())
    throw ShapeError("analytic_eps: dimension mismatch");
  const double abar = schedule.alpha_bars[t - 1];
  const double denom = abar * data.stddev * data.stddev + 1.0 - abar;
  const double scale = std::sqrt(1.0 - abar) / denom;
  const double root_abar = std::sqrt(abar);
  std::vector<double> out(x_t.size());
  for (std::size_t k = 0; k < x_t.size(); ++k)
    out[k] = scale * (x_t[k] - root_abar * data.mean[k]);
  return out;
}

std::vector<double> reverse_step(const std::vector<double>& x_t, std::size_t t,
                                 const VarianceSchedule& schedule, const GaussianDataSpec& data,
                                 bool stochastic, Rng& rng) {
  check_t(t, schedule);
  const double a = schedule.alphas[t - 1];
  const double abar = schedule.alpha_bars[t - 1];
  const double eps_coef = (1.0 - a) / std::sqrt(1.0 - abar);
  const double inv_root_a = 1.0 / std::sqrt(a);
  const std::vector<double> eps = analytic_eps(x_t, t, schedule, data);
  std::vector<double> out(x_t.size());
  for (std::size_t k = 0; k < x_t.size(); ++k)
    out[k] = inv_root_a * (x_t[k] - eps_coef * eps[k]);
  if (stochastic) {
    const double sigma = schedule.sigmas[t - 1];
    for (double& v : out) v += sigma * rng.normal();
  }
  return out;
}

std::vector<double> run_reverse_chain(std::vector<double> x_T, const VarianceSchedule& schedule,
                                      const GaussianDataSpec& data, bool stochastic, Rng& rng) {
  for (std::size_t t = schedule.steps(); t >= 1; --t) {
    x_T = reverse_step(x_T, t, schedule, data, stochastic, rng);
  }
  return x_T;
}

ChainEnsembleStats run_chain_ensemble(std::size_t n_chains, const VarianceSchedule& schedule,
                                      const GaussianDataSpec& data, bool stochastic,
                                      std::uint64_t seed) {
  const std::size_t dim = data.mean.size();
  Matrix finals(n_chains, dim);
  Rng root(seed);
  const std::int64_t n = static_cast<std::int64_t>(n_chains);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    std::vector<double> x(dim);
    for (double& v : x) v = rng.normal();  // standard-normal start
    x = run_reverse_chain(std::move(x), schedule, data, stochastic, rng);
    std::copy(x.begin(), x.end(), finals.row(static_cast<std::size_t>(i)));
  }

  ChainEnsembleStats stats;
  stats.mean.assign(dim, 0.0);
  stats.variance.assign(dim, 0.0);
  for (std::size_t i = 0; i < finals.rows; ++i)
    for (std::size_t k = 0; k < dim; ++k) stats.mean[k] += finals.at(i, k);
  for (double& v : stats.mean) v /= static_cast<double>(n_chains);
  for (std::size_t i = 0; i < finals.rows; ++i)
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = finals.at(i, k) - stats.mean[k];
      stats.variance[k] += d * d;
    }
  for (double& v : stats.variance) v /= static_cast<double>(n_chains);
  return stats;
}

std::vector<TrajectoryPoint> reverse_trajectory_stats(std::size_t n_chains,
                                                      const VarianceSchedule& schedule,
                                                      const GaussianDataSpec& data,
                                                      bool stochastic, std::uint64_t seed) {
  const std::size_t dim = data.mean.size();
  const std::size_t steps = schedule.steps();
  // coord-0 value of chain i at step index (T - t); row per chain.
  Matrix track(n_chains, steps + 1);
  Rng root(seed);
  const std::int64_t n = static_cast<std::int64_t>(n_chains);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    std::vector<double> x(dim);
    for (double& v : x) v = rng.normal();
    track.at(static_cast<std::size_t>(i), 0) = x[0];
    std::size_t col = 1;
    for (std::size_t t = steps; t >= 1; --t, ++col) {
      x = reverse_step(x, t, schedule, data, stochastic, rng);
      track.at(static_cast<std::size_t>(i), col) = x[0];
    }
  }

  std::vector<TrajectoryPoint> out;
  for (std::size_t col = 0; col <= steps; ++col) {
    TrajectoryPoint p;
    p.t = steps - col;
    double mean = 0.0;
    for (std::size_t i = 0; i < n_chains; ++i) mean += track.at(i, col);
    mean /= static_cast<double>(n_chains);
    double var = 0.0;
    for (std::size_t i = 0; i < n_chains; ++i) {
      const double d = track.at(i, col) - mean;
      var += d * d;
    }
    p.mean = mean;
    p.variance = var / static_cast<double>(n_chains);
    out.push_back(p);
  }
  return out;
}

std::string KlInequalityReport::to_json() const {
  nlohmann::json j;
  j["per_seed"] = nlohmann::json::array();
  for (const auto& s : per_seed) {
    j["per_seed"].push_back({{"seed", s.seed},
                             {"kl_train_vs_gen", s.kl_train_vs_gen},
                             {"kl_train_vs_filtered", s.kl_train_vs_filtered},
                             {"ordering_holds", s.ordering_holds},
                             {"degenerate_filter", s.degenerate_filter}});
  }
  j["fraction_ordered"] = fraction_ordered;
  return j.dump(2);
}

ShiftSnapshot build_shift_snapshot(const KlExperimentConfig& cfg, std::uint64_t seed) {
  ProblemSpec pspec = cfg.problem;
  pspec.seed = Rng::mix(pspec.seed, seed);
  const Problem problem = make_problem(pspec);

  TrainConfig tcfg = cfg.target_train;
  tcfg.seed = Rng::mix(tcfg.seed, seed);
  const TrainResult trained = train(problem.train, cfg.target_spec, tcfg);
  MlpTarget target(cfg.target_spec, trained.params, QueryMode::kConfidence);

  ConditionalGaussianGenerator generator(pspec.means(), pspec.class_std, cfg.shift,
                                         Rng::mix(cfg.generator_seed, seed));

  PipelineConfig pcfg = cfg.pipeline;
  pcfg.seed = Rng::mix(pcfg.seed, seed);
  const Step1Result d_a = step1_generate(target, generator, pcfg);
  AugmentResult d_aux = augment(target, d_a.data, pcfg);

  ShiftSnapshot snap;
  snap.train = problem.train;
  snap.generated = std::move(d_aux.data);

  if (cfg.filter_enabled) {
    FilterResult fr = filter(target, snap.generated, pcfg);
    snap.filtered = std::move(fr.data);
    for (int c = 0; c < cfg.problem.class_count; ++c) {
      if (snap.filtered.class_indices(c).empty()) snap.degenerate_filter = true;
    }
  } else {
    snap.filtered = snap.generated;
  }

  snap.train_out = target.query_confidence(snap.train.to_matrix());
  snap.generated_out = target.query_confidence(snap.generated.to_matrix());
  snap.filtered_out = target.query_confidence(snap.filtered.to_matrix());
  return snap;
}

KlInequalityReport kl_inequality_experiment(const KlExperimentConfig& cfg) {
  KlInequalityReport report;
  for (std::uint64_t seed : cfg.seeds) {
    const ShiftSnapshot snap = build_shift_snapshot(cfg, seed);
    KlSeedOutcome outcome;
    outcome.seed = seed;
    outcome.degenerate_filter = snap.degenerate_filter;
    outcome.kl_train_vs_gen =
        metrics::kl_histogram(snap.train_out, snap.generated_out, cfg.histogram);
    outcome.kl_train_vs_filtered =
        metrics::kl_histogram(snap.train_out, snap.filtered_out, cfg.histogram);
    outcome.ordering_holds = outcome.kl_train_vs_filtered <= outcome.kl_train_vs_gen;
    report.per_seed.push_back(outcome);
  }
  std::size_t ordered = 0;
  for (const auto& s : report.per_seed) {
    if (s.ordering_holds) ++ordered;
  }
  report.fraction_ordered =
      report.per_seed.empty() ? 0.0
                              : static_cast<double>(ordered) / static_cast<double>(report.per_seed.size());
  return report;
}

}  // namespace boxlab
