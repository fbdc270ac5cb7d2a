#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "boxlab/matrix.hpp"
#include "boxlab/mlp.hpp"
#include "boxlab/rng.hpp"

namespace boxlab {

enum class QueryMode { kConfidence, kLabelOnly };

// Length-C score vector. Undefended vectors are softmax outputs (entries in
// [0,1], summing to 1); defended vectors are finite but unconstrained.
using ConfidenceVector = std::vector<double>;

struct DefenseConfig {
  double noise_mean = 0.0;
  double noise_variance = 0.1;
  std::uint64_t seed = 0;
};

// The black-box query boundary. Every query bumps the counter by its batch
// size, so an attack's total query budget can be audited afterwards.
class Target {
 public:
  virtual ~Target() = default;

  QueryMode mode() const { return mode_; }
  virtual int classes() const = 0;
  virtual std::size_t dim() const = 0;
  std::uint64_t query_count() const { return query_count_.load(); }

  // One confidence vector per batch row. Label-only handles refuse this.
  Matrix query_confidence(const Matrix& batch);

  // Argmax of the (possibly perturbed) confidence; ties -> lowest class id.
  std::vector<int> query_label(const Matrix& batch);

  // Whether concurrent querying is pure (no internal draw order to disturb).
  // The defended wrapper returns false: its noise stream is a shared resource.
  virtual bool stateless_queries() const { return true; }

 protected:
  explicit Target(QueryMode mode) : mode_(mode) {}
  // For handles that only learn their mode after construction (remote).
  void set_mode(QueryMode mode) { mode_ = mode; }
  // Raw per-row scores; also used for label queries in label-only mode.
  virtual Matrix raw_scores(const Matrix& batch) = 0;

 private:
  void check_batch(const Matrix& batch) const;
  QueryMode mode_;
  std::atomic<std::uint64_t> query_count_{0};
};

// In-process target backed by MLP weights.
class MlpTarget : public Target {
 public:
  MlpTarget(MlpSpec spec, MlpParams params, QueryMode mode);

  int classes() const override { return static_cast<int>(spec_.output_dim()); }
  std::size_t dim() const override { return spec_.input_dim(); }

  const MlpSpec& spec() const { return spec_; }
  const MlpParams& params() const { return params_; }

 protected:
  Matrix raw_scores(const Matrix& batch) override;

 private:
  MlpSpec spec_;
  MlpParams params_;
};

// Output-perturbation defense: independent Gaussian noise on every score,
// no renormalization. Noise draws are serialized, so outputs are
// deterministic for a fixed sequence of queries.
class DefendedTarget : public Target {
 public:
  DefendedTarget(std::shared_ptr<Target> inner, DefenseConfig cfg);

  int classes() const override { return inner_->classes(); }
  std::size_t dim() const override { return inner_->dim(); }
  bool stateless_queries() const override { return false; }

 protected:
  Matrix raw_scores(const Matrix& batch) override;

 private:
  std::shared_ptr<Target> inner_;
  DefenseConfig cfg_;
  std::mutex rng_mutex_;
  Rng rng_;
};

std::shared_ptr<Target> wrap_with_defense(std::shared_ptr<Target> target,
                                          const DefenseConfig& cfg);

}  // namespace boxlab
