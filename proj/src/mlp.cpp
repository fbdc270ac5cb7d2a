#include "boxlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "boxlab/rng.hpp"

namespace boxlab {

namespace {
constexpr double kProbFloor = 1e-12;
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) throw ConfigError("spec: need at least input and output widths");
  for (std::size_t w : layer_widths) {
    if (w < 1) throw ConfigError("spec: all layer widths must be >= 1");
  }
}

MlpSpec MlpSpec::mirrored(OutputHead head) const {
  MlpSpec m = *this;
  std::reverse(m.layer_widths.begin(), m.layer_widths.end());
  m.output_head = head;
  return m;
}

void MlpParams::check_consistent(const MlpSpec& spec) const {
  spec.validate();
  if (weights.size() != spec.layer_count() || biases.size() != spec.layer_count())
    throw ShapeError("params: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows != spec.layer_widths[l] || weights[l].cols != spec.layer_widths[l + 1])
      throw ShapeError("params: weight shape mismatch at layer " + std::to_string(l));
    if (biases[l].size() != spec.layer_widths[l + 1])
      throw ShapeError("params: bias shape mismatch at layer " + std::to_string(l));
  }
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.data.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
}

TrainTargets TrainTargets::classes(std::vector<int> ids) {
  TrainTargets t;
  t.class_ids = std::move(ids);
  return t;
}

TrainTargets TrainTargets::values(Matrix m) {
  TrainTargets t;
  t.vectors = std::move(m);
  t.is_vector = true;
  return t;
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpParams p;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const std::size_t fan_in = spec.layer_widths[l];
    const std::size_t fan_out = spec.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  return p;
}

namespace {

struct ForwardTrace {
  // pre[l] holds the affine output of layer l; act[l] the activated value
  // (act.back() is the head output).
  std::vector<Matrix> pre;
  std::vector<Matrix> act;
};

void add_bias_inplace(Matrix& m, const std::vector<double>& bias) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) r[j] += bias[j];
  }
}

void activate_inplace(Matrix& m, Activation a) {
  if (a == Activation::kRelu) {
    for (double& v : m.data) v = v > 0.0 ? v : 0.0;
  } else {
    for (double& v : m.data) v = std::tanh(v);
  }
}

ForwardTrace forward_trace(const MlpParams& params, const MlpSpec& spec, const Matrix& batch) {
  if (batch.cols != spec.input_dim())
    throw ShapeError("forward: batch cols " + std::to_string(batch.cols) +
                     " != input dim " + std::to_string(spec.input_dim()));
  ForwardTrace t;
  const Matrix* cur = &batch;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    Matrix z = kernels::matmul(*cur, params.weights[l]);
    add_bias_inplace(z, params.biases[l]);
    t.pre.push_back(z);
    if (l + 1 < spec.layer_count()) {
      activate_inplace(z, spec.hidden_activation);
    } else if (spec.output_head == OutputHead::kSoftmax) {
      kernels::softmax_rows_inplace(z);
    }
    t.act.push_back(std::move(z));
    cur = &t.act.back();
  }
  return t;
}

void check_targets(const MlpSpec& spec, const Matrix& batch, const TrainTargets& targets,
                   Loss loss) {
  if (loss == Loss::kMse) {
    if (!targets.is_vector) throw ShapeError("mse loss requires vector targets");
    if (targets.vectors.rows != batch.rows || targets.vectors.cols != spec.output_dim())
      throw ShapeError("mse targets shape mismatch");
    return;
  }
  if (targets.is_vector) throw ShapeError("classification loss requires class-id targets");
  if (targets.class_ids.size() != batch.rows) throw ShapeError("label count != batch rows");
  const int limit = loss == Loss::kBinaryCrossEntropy ? 2 : static_cast<int>(spec.output_dim());
  for (int y : targets.class_ids) {
    if (y < 0 || y >= limit) throw ShapeError("label out of range");
  }
  if (loss == Loss::kCrossEntropy && spec.output_head != OutputHead::kSoftmax)
    throw ConfigError("cross_entropy requires a softmax head");
  if (loss == Loss::kBinaryCrossEntropy &&
      (spec.output_head != OutputHead::kLinear || spec.output_dim() != 1))
    throw ConfigError("binary_cross_entropy requires a width-1 linear head");
}

double loss_from_output(const Matrix& out, const TrainTargets& targets, Loss loss) {
  const double n = static_cast<double>(out.rows);
  double acc = 0.0;
  switch (loss) {
    case Loss::kCrossEntropy:
      for (std::size_t i = 0; i < out.rows; ++i) {
        const double p = std::max(out.at(i, targets.class_ids[i]), kProbFloor);
        acc -= std::log(p);
      }
      break;
    case Loss::kMse:
      for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
          const double d = out.at(i, j) - targets.vectors.at(i, j);
          acc += d * d;
        }
      }
      break;
    case Loss::kBinaryCrossEntropy:
      for (std::size_t i = 0; i < out.rows; ++i) {
        const double p = sigmoid(out.at(i, 0));
        const double y = static_cast<double>(targets.class_ids[i]);
        acc -= y * std::log(std::max(p, kProbFloor)) +
               (1.0 - y) * std::log(std::max(1.0 - p, kProbFloor));
      }
      break;
  }
  return acc / n;
}

// dLoss/dPre for the head layer. For softmax+CE and sigmoid+BCE this is the
// usual fused form; for mse and a softmax head the Jacobian is applied.
Matrix head_gradient(const Matrix& out, const Matrix& /*pre*/, const MlpSpec& spec,
                     const TrainTargets& targets, Loss loss) {
  Matrix g(out.rows, out.cols);
  const double n = static_cast<double>(out.rows);
  switch (loss) {
    case Loss::kCrossEntropy:
      for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
          const double y = static_cast<int>(j) == targets.class_ids[i] ? 1.0 : 0.0;
          g.at(i, j) = (out.at(i, j) - y) / n;
        }
      }
      break;
    case Loss::kBinaryCrossEntropy:
      for (std::size_t i = 0; i < out.rows; ++i) {
        g.at(i, 0) = (sigmoid(out.at(i, 0)) - static_cast<double>(targets.class_ids[i])) / n;
      }
      break;
    case Loss::kMse: {
      if (spec.output_head == OutputHead::kLinear) {
        for (std::size_t i = 0; i < out.rows; ++i)
          for (std::size_t j = 0; j < out.cols; ++j)
            g.at(i, j) = 2.0 * (out.at(i, j) - targets.vectors.at(i, j)) / n;
      } else {
        // dL/dz = J_softmax^T * dL/dp, row by row.
        for (std::size_t i = 0; i < out.rows; ++i) {
          double dot = 0.0;
          std::vector<double> dp(out.cols);
          for (std::size_t j = 0; j < out.cols; ++j) {
            dp[j] = 2.0 * (out.at(i, j) - targets.vectors.at(i, j)) / n;
            dot += dp[j] * out.at(i, j);
          }
          for (std::size_t j = 0; j < out.cols; ++j)
            g.at(i, j) = out.at(i, j) * (dp[j] - dot);
        }
      }
      break;
    }
  }
  return g;
}

}  // namespace

Matrix forward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch) {
  params.check_consistent(spec);
  return forward_trace(params, spec, batch).act.back();
}

double loss_value(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                  const TrainTargets& targets, Loss loss) {
  params.check_consistent(spec);
  check_targets(spec, batch, targets, loss);
  const auto trace = forward_trace(params, spec, batch);
  return loss_from_output(trace.act.back(), targets, loss);
}

MlpParams gradients(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                    const TrainTargets& targets, Loss loss) {
  params.check_consistent(spec);
  check_targets(spec, batch, targets, loss);
  const auto trace = forward_trace(params, spec, batch);
  if (!trace.act.back().all_finite()) throw NumericError("forward pass produced non-finite values");

  MlpParams grads;
  grads.weights.resize(spec.layer_count());
  grads.biases.resize(spec.layer_count());

  Matrix delta = head_gradient(trace.act.back(), trace.pre.back(), spec, targets, loss);
  for (std::size_t l = spec.layer_count(); l-- > 0;) {
    const Matrix& input = l == 0 ? batch : trace.act[l - 1];
    grads.weights[l] = kernels::matmul_tn(input, delta);
    std::vector<double> db(delta.cols, 0.0);
    for (std::size_t i = 0; i < delta.rows; ++i) {
      const double* r = delta.row(i);
      for (std::size_t j = 0; j < delta.cols; ++j) db[j] += r[j];
    }
    grads.biases[l] = std::move(db);
    if (l == 0) break;
    Matrix next = kernels::matmul_nt(delta, params.weights[l]);
    // Chain through the hidden activation of layer l-1.
    const Matrix& pre = trace.pre[l - 1];
    if (spec.hidden_activation == Activation::kRelu) {
      for (std::size_t i = 0; i < next.data.size(); ++i) {
        if (pre.data[i] <= 0.0) next.data[i] = 0.0;
      }
    } else {
      const Matrix& a = trace.act[l - 1];
      for (std::size_t i = 0; i < next.data.size(); ++i) {
        next.data[i] *= 1.0 - a.data[i] * a.data[i];
      }
    }
    delta = std::move(next);
  }
  return grads;
}

namespace {

struct AdamState {
  MlpParams m;
  MlpParams v;
  std::size_t step = 0;
};

MlpParams zeros_like(const MlpParams& p) {
  MlpParams z;
  for (const auto& w : p.weights) z.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : p.biases) z.biases.emplace_back(b.size(), 0.0);
  return z;
}

void apply_update(MlpParams& params, const MlpParams& grads, const TrainConfig& cfg,
                  AdamState& adam) {
  auto update = [&](double& p, double g, double& m, double& v) {
    g += cfg.weight_decay * p;
    if (cfg.optimizer == Optimizer::kSgd) {
      p -= cfg.learning_rate * g;
      return;
    }
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    const double mh = m / (1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step)));
    const double vh = v / (1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step)));
    p -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
  };

  ++adam.step;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].data.size(); ++i) {
      update(params.weights[l].data[i], grads.weights[l].data[i], adam.m.weights[l].data[i],
             adam.v.weights[l].data[i]);
    }
    for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
      update(params.biases[l][i], grads.biases[l][i], adam.m.biases[l][i], adam.v.biases[l][i]);
    }
  }
}

TrainTargets slice_targets(const TrainTargets& t, const std::vector<std::size_t>& idx,
                           std::size_t begin, std::size_t end, std::size_t cols) {
  TrainTargets out;
  if (t.is_vector) {
    out.is_vector = true;
    out.vectors = Matrix(end - begin, cols);
    for (std::size_t i = begin; i < end; ++i) {
      std::copy(t.vectors.row(idx[i]), t.vectors.row(idx[i]) + cols, out.vectors.row(i - begin));
    }
  } else {
    for (std::size_t i = begin; i < end; ++i) out.class_ids.push_back(t.class_ids[idx[i]]);
  }
  return out;
}

}  // namespace

TrainResult train(const Matrix& inputs, const TrainTargets& targets, const MlpSpec& spec,
                  const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (inputs.rows == 0) throw std::invalid_argument("train: empty dataset");
  check_targets(spec, inputs, targets, config.loss);

  TrainResult result;
  result.params = init_params(spec, config.seed);
  AdamState adam{zeros_like(result.params), zeros_like(result.params), 0};
  // Stream 1 so epoch shuffles never overlap the init draws.
  Rng shuffle_rng = Rng(config.seed).child(1);

  std::vector<std::size_t> idx(inputs.rows);
  std::iota(idx.begin(), idx.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[shuffle_rng.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < idx.size(); begin += config.batch_size) {
      const std::size_t end = std::min(idx.size(), begin + config.batch_size);
      Matrix batch(end - begin, inputs.cols);
      for (std::size_t i = begin; i < end; ++i) {
        std::copy(inputs.row(idx[i]), inputs.row(idx[i]) + inputs.cols, batch.row(i - begin));
      }
      const TrainTargets bt = slice_targets(targets, idx, begin, end, spec.output_dim());
      const auto trace_loss = loss_value(result.params, spec, batch, bt, config.loss);
      epoch_loss += trace_loss * static_cast<double>(end - begin);
      const MlpParams g = gradients(result.params, spec, batch, bt, config.loss);
      apply_update(result.params, g, config, adam);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(inputs.rows));
  }
  return result;
}

TrainResult train(const Dataset& dataset, const MlpSpec& spec, const TrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  return train(dataset.to_matrix(), TrainTargets::classes(dataset.labels()), spec, config);
}

int argmax_row(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<int>(best);
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = argmax_row(m.row(i), m.cols);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }
std::string to_string(OutputHead h) { return h == OutputHead::kSoftmax ? "softmax" : "linear"; }
std::string to_string(Loss l) {
  switch (l) {
    case Loss::kCrossEntropy: return "cross_entropy";
    case Loss::kMse: return "mse";
    case Loss::kBinaryCrossEntropy: return "binary_cross_entropy";
  }
  return "?";
}
std::string to_string(Optimizer o) { return o == Optimizer::kSgd ? "sgd" : "adam"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + s + "'");
}
OutputHead output_head_from_string(const std::string& s) {
  if (s == "softmax") return OutputHead::kSoftmax;
  if (s == "linear") return OutputHead::kLinear;
  throw ConfigError("unknown output head '" + s + "'");
}
Loss loss_from_string(const std::string& s) {
  if (s == "cross_entropy") return Loss::kCrossEntropy;
  if (s == "mse") return Loss::kMse;
  if (s == "binary_cross_entropy") return Loss::kBinaryCrossEntropy;
  throw ConfigError("unknown loss '" + s + "'");
}
Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::kSgd;
  if (s == "adam") return Optimizer::kAdam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

}  // namespace boxlab
