#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boxlab/dataset.hpp"
#include "boxlab/matrix.hpp"

namespace boxlab {

enum class Activation { kRelu, kTanh };
enum class OutputHead { kSoftmax, kLinear };
enum class Loss { kCrossEntropy, kMse, kBinaryCrossEntropy };
enum class Optimizer { kSgd, kAdam };

// Architecture of a dense network: input width first, output width last.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  Activation hidden_activation = Activation::kRelu;
  OutputHead output_head = OutputHead::kSoftmax;

  void validate() const;
  std::size_t input_dim() const { return layer_widths.front(); }
  std::size_t output_dim() const { return layer_widths.back(); }
  std::size_t layer_count() const { return layer_widths.size() - 1; }

  // Same widths read back to front; used to derive decoder shapes.
  MlpSpec mirrored(OutputHead head) const;
};

// Weights are (fan_in x fan_out); the forward pass is X*W + b.
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  void check_consistent(const MlpSpec& spec) const;
  std::size_t parameter_count() const;
};

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  Optimizer optimizer = Optimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  Loss loss = Loss::kCrossEntropy;

  void validate() const;
};

// Supervision for one batch: class ids (cross-entropy / binary cross-entropy,
// where ids are 0/1) or a row-per-sample target matrix (mse).
struct TrainTargets {
  std::vector<int> class_ids;
  Matrix vectors;
  bool is_vector = false;

  static TrainTargets classes(std::vector<int> ids);
  static TrainTargets values(Matrix m);
};

// Deterministic Glorot-uniform init, zero biases.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

// Batch forward pass. Softmax heads emit rows summing to 1; linear heads emit
// raw affine outputs (binary cross-entropy applies its sigmoid internally).
Matrix forward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch);

// Mean loss over the batch.
double loss_value(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                  const TrainTargets& targets, Loss loss);

// Gradient of the mean batch loss w.r.t. every parameter.
MlpParams gradients(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                    const TrainTargets& targets, Loss loss);

struct TrainResult {
  MlpParams params;
  std::vector<double> loss_history;  // one meaned entry per epoch
};

TrainResult train(const Matrix& inputs, const TrainTargets& targets, const MlpSpec& spec,
                  const TrainConfig& config);

// Convenience: labeled dataset with a classification loss.
TrainResult train(const Dataset& dataset, const MlpSpec& spec, const TrainConfig& config);

// Argmax with ties broken toward the lowest class id.
int argmax_row(const double* row, std::size_t n);
std::vector<int> argmax_rows(const Matrix& m);

double sigmoid(double x);

std::string to_string(Activation a);
std::string to_string(OutputHead h);
std::string to_string(Loss l);
std::string to_string(Optimizer o);
Activation activation_from_string(const std::string& s);
OutputHead output_head_from_string(const std::string& s);
Loss loss_from_string(const std::string& s);
Optimizer optimizer_from_string(const std::string& s);

}  // namespace boxlab
