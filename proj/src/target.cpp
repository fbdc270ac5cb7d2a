#include "boxlab/target.hpp"

#include <cmath>

namespace boxlab {

void Target::check_batch(const Matrix& batch) const {
  if (batch.cols != dim())
    throw ShapeError("query: batch cols " + std::to_string(batch.cols) + " != target dim " +
                     std::to_string(dim()));
}

Matrix Target::query_confidence(const Matrix& batch) {
  if (mode_ != QueryMode::kConfidence)
    throw CapabilityError("target is label-only; confidence queries are not available");
  check_batch(batch);
  Matrix out = raw_scores(batch);
  query_count_.fetch_add(batch.rows);
  return out;
}

std::vector<int> Target::query_label(const Matrix& batch) {
  check_batch(batch);
  Matrix scores = raw_scores(batch);
  query_count_.fetch_add(batch.rows);
  return argmax_rows(scores);
}

MlpTarget::MlpTarget(MlpSpec spec, MlpParams params, QueryMode mode)
    : Target(mode), spec_(std::move(spec)), params_(std::move(params)) {
  params_.check_consistent(spec_);
}

Matrix MlpTarget::raw_scores(const Matrix& batch) { return forward(params_, spec_, batch); }

DefendedTarget::DefendedTarget(std::shared_ptr<Target> inner, DefenseConfig cfg)
    : Target(inner->mode()), inner_(std::move(inner)), cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.noise_variance < 0.0) throw ConfigError("defense: variance must be >= 0");
  if (inner_->mode() != QueryMode::kConfidence)
    throw ConfigError("defense: inner target must be in confidence mode");
}

Matrix DefendedTarget::raw_scores(const Matrix& batch) {
  Matrix scores = inner_->query_confidence(batch);
  if (cfg_.noise_variance == 0.0 && cfg_.noise_mean == 0.0) return scores;
  const double stddev = std::sqrt(cfg_.noise_variance);
  std::lock_guard<std::mutex> lock(rng_mutex_);
  for (double& v : scores.data) v += rng_.normal(cfg_.noise_mean, stddev);
  return scores;
}

std::shared_ptr<Target> wrap_with_defense(std::shared_ptr<Target> target,
                                          const DefenseConfig& cfg) {
  return std::make_shared<DefendedTarget>(std::move(target), cfg);
}

}  // namespace boxlab
