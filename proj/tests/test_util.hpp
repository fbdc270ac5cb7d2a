#pragma once

// Shared oracles and fixtures. Everything here recomputes expectations by an
// independent route (finite differences, exhaustive counting, closed forms)
// so the library code under test never checks itself.

#include <cmath>
#include <vector>

#include "boxlab/matrix.hpp"
#include "boxlab/mlp.hpp"
#include "boxlab/rng.hpp"
#include "boxlab/target.hpp"

namespace testutil {

using namespace boxlab;

// Central finite differences of the mean batch loss, parameter by parameter.
inline MlpParams fd_gradients(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                              const TrainTargets& targets, Loss loss, double h = 1e-4) {
  MlpParams g = params;
  MlpParams probe = params;
  auto fd = [&](double& slot, double& out) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss_value(probe, spec, batch, targets, loss);
    slot = saved - h;
    const double down = loss_value(probe, spec, batch, targets, loss);
    slot = saved;
    out = (up - down) / (2.0 * h);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].data.size(); ++i)
      fd(probe.weights[l].data[i], g.weights[l].data[i]);
    for (std::size_t i = 0; i < params.biases[l].size(); ++i)
      fd(probe.biases[l][i], g.biases[l][i]);
  }
  return g;
}

// Worst relative deviation between analytic and finite-difference gradients.
// Tiny entries compare against an absolute floor so FD noise cannot divide
// by itself.
inline double max_relative_deviation(const MlpParams& analytic, const MlpParams& fd) {
  double worst = 0.0;
  auto cmp = [&](double a, double f) {
    const double denom = std::max(1e-4, std::abs(a) + std::abs(f));
    worst = std::max(worst, std::abs(a - f) / denom);
  };
  for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
    for (std::size_t i = 0; i < analytic.weights[l].data.size(); ++i)
      cmp(analytic.weights[l].data[i], fd.weights[l].data[i]);
    for (std::size_t i = 0; i < analytic.biases[l].size(); ++i)
      cmp(analytic.biases[l][i], fd.biases[l][i]);
  }
  return worst;
}

// O(P*N) pairwise AUC.
inline double brute_force_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double acc = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n) acc += 1.0;
      else if (p == n) acc += 0.5;
    }
  }
  return acc / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Test-only target that replays fixed per-sample output vectors. Inputs are
// matched by their first feature, which the fixture sets to the sample index.
class FixedOutputTarget : public Target {
 public:
  FixedOutputTarget(Matrix outputs, std::size_t dim, QueryMode mode = QueryMode::kConfidence)
      : Target(mode), outputs_(std::move(outputs)), dim_(dim) {}

  int classes() const override { return static_cast<int>(outputs_.cols); }
  std::size_t dim() const override { return dim_; }

 protected:
  Matrix raw_scores(const Matrix& batch) override {
    Matrix out(batch.rows, outputs_.cols);
    for (std::size_t i = 0; i < batch.rows; ++i) {
      const auto id = static_cast<std::size_t>(batch.at(i, 0));
      for (std::size_t j = 0; j < outputs_.cols; ++j) out.at(i, j) = outputs_.at(id, j);
    }
    return out;
  }

 private:
  Matrix outputs_;
  std::size_t dim_;
};

// Linear two-class target: class 1 iff w.x + b > 0. Realized as a width-2
// linear softmax MLP so it exercises the production forward path.
inline std::shared_ptr<MlpTarget> linear_target(const std::vector<double>& w, double b,
                                                QueryMode mode = QueryMode::kConfidence) {
  MlpSpec spec;
  spec.layer_widths = {w.size(), 2};
  spec.output_head = OutputHead::kSoftmax;
  MlpParams params;
  Matrix weight(w.size(), 2);
  for (std::size_t k = 0; k < w.size(); ++k) {
    weight.at(k, 0) = -w[k];
    weight.at(k, 1) = w[k];
  }
  params.weights.push_back(weight);
  params.biases.push_back({-b, b});
  return std::make_shared<MlpTarget>(spec, params, mode);
}

// Target that always answers the same class, as confidently as possible.
inline std::shared_ptr<MlpTarget> constant_target(std::size_t dim, int classes, int always,
                                                  QueryMode mode = QueryMode::kConfidence) {
  MlpSpec spec;
  spec.layer_widths = {dim, static_cast<std::size_t>(classes)};
  spec.output_head = OutputHead::kSoftmax;
  MlpParams params;
  params.weights.emplace_back(dim, classes);
  std::vector<double> bias(classes, 0.0);
  bias[always] = 50.0;
  params.biases.push_back(bias);
  return std::make_shared<MlpTarget>(spec, params, mode);
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

inline bool params_equal(const MlpParams& a, const MlpParams& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].data != b.weights[l].data) return false;
    if (a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

}  // namespace testutil
