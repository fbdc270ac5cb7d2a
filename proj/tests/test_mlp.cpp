#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "boxlab/mlp.hpp"
#include "test_util.hpp"

using namespace boxlab;

namespace {

MlpSpec small_spec(std::vector<std::size_t> widths, Activation act, OutputHead head) {
  MlpSpec s;
  s.layer_widths = std::move(widths);
  s.hidden_activation = act;
  s.output_head = head;
  return s;
}

}  // namespace

TEST_CASE("softmax head on symmetric logits") {
  // Zero weights, zero biases: logits are [0, 0] for any input.
  const MlpSpec spec = small_spec({3, 2}, Activation::kRelu, OutputHead::kSoftmax);
  MlpParams params;
  params.weights.emplace_back(3, 2);
  params.biases.emplace_back(2, 0.0);
  Matrix batch(1, 3);
  batch.data = {0.4, -1.0, 2.0};
  const Matrix out = forward(params, spec, batch);
  CHECK(out.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax of [ln 2, 0] is [2/3, 1/3]") {
  const MlpSpec spec = small_spec({1, 2}, Activation::kRelu, OutputHead::kSoftmax);
  MlpParams params;
  params.weights.emplace_back(1, 2);
  params.biases.push_back({std::log(2.0), 0.0});
  Matrix batch(1, 1);
  batch.data = {0.0};
  const Matrix out = forward(params, spec, batch);
  CHECK(out.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero-weight linear head returns the bias on every row") {
  const MlpSpec spec = small_spec({4, 3, 2}, Activation::kTanh, OutputHead::kLinear);
  MlpParams params = init_params(spec, 5);
  for (auto& w : params.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
  params.biases.back() = {1.25, -0.5};
  Rng rng(6);
  const Matrix batch = testutil::random_matrix(7, 4, rng);
  const Matrix out = forward(params, spec, batch);
  for (std::size_t i = 0; i < out.rows; ++i) {
    CHECK(out.at(i, 0) == doctest::Approx(1.25));
    CHECK(out.at(i, 1) == doctest::Approx(-0.5));
  }
}

TEST_CASE("forward rejects dimension mismatches") {
  const MlpSpec spec = small_spec({4, 2}, Activation::kRelu, OutputHead::kSoftmax);
  const MlpParams params = init_params(spec, 1);
  Matrix bad(1, 3);
  CHECK_THROWS_AS(forward(params, spec, bad), ShapeError);
}

TEST_CASE("analytic gradients match central finite differences on a 2-4-3 net") {
  const MlpSpec spec = small_spec({2, 4, 3}, Activation::kTanh, OutputHead::kSoftmax);
  const MlpParams params = init_params(spec, 21);
  Rng rng(22);
  const Matrix batch = testutil::random_matrix(6, 2, rng);
  std::vector<int> labels;
  for (std::size_t i = 0; i < batch.rows; ++i)
    labels.push_back(static_cast<int>(rng.uniform_int(3)));
  const TrainTargets t = TrainTargets::classes(labels);

  const MlpParams analytic = gradients(params, spec, batch, t, Loss::kCrossEntropy);
  const MlpParams fd = testutil::fd_gradients(params, spec, batch, t, Loss::kCrossEntropy);
  CHECK(testutil::max_relative_deviation(analytic, fd) <= 1e-4);
}

TEST_CASE("gradients match finite differences across losses, heads and activations") {
  Rng rng(23);
  struct Case {
    MlpSpec spec;
    Loss loss;
  };
  std::vector<Case> cases = {
      {small_spec({3, 5, 4}, Activation::kTanh, OutputHead::kSoftmax), Loss::kCrossEntropy},
      {small_spec({2, 6, 2}, Activation::kRelu, OutputHead::kSoftmax), Loss::kCrossEntropy},
      {small_spec({3, 4, 3}, Activation::kTanh, OutputHead::kLinear), Loss::kMse},
      {small_spec({4, 3, 2}, Activation::kRelu, OutputHead::kLinear), Loss::kMse},
      {small_spec({2, 4, 2}, Activation::kTanh, OutputHead::kSoftmax), Loss::kMse},
      {small_spec({5, 4, 1}, Activation::kTanh, OutputHead::kLinear), Loss::kBinaryCrossEntropy},
      {small_spec({3, 8, 8, 1}, Activation::kRelu, OutputHead::kLinear),
       Loss::kBinaryCrossEntropy},
  };
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto& c = cases[ci];
    const MlpParams params = init_params(c.spec, 100 + ci);
    const Matrix batch = testutil::random_matrix(5, c.spec.input_dim(), rng);
    TrainTargets t;
    if (c.loss == Loss::kMse) {
      t = TrainTargets::values(testutil::random_matrix(5, c.spec.output_dim(), rng));
    } else {
      const int limit = c.loss == Loss::kBinaryCrossEntropy
                            ? 2
                            : static_cast<int>(c.spec.output_dim());
      std::vector<int> labels;
      for (int i = 0; i < 5; ++i) labels.push_back(static_cast<int>(rng.uniform_int(limit)));
      t = TrainTargets::classes(labels);
    }
    const MlpParams analytic = gradients(params, c.spec, batch, t, c.loss);
    const MlpParams fd = testutil::fd_gradients(params, c.spec, batch, t, c.loss);
    INFO("case ", ci);
    CHECK(testutil::max_relative_deviation(analytic, fd) <= 1e-4);
  }
}

TEST_CASE("linear mse gradient equals the closed form 2 X^T (XW - Y) / n") {
  const MlpSpec spec = small_spec({3, 2}, Activation::kRelu, OutputHead::kLinear);
  MlpParams params = init_params(spec, 31);
  Rng rng(32);
  const Matrix x = testutil::random_matrix(8, 3, rng);
  const Matrix y = testutil::random_matrix(8, 2, rng);
  const MlpParams g = gradients(params, spec, x, TrainTargets::values(y), Loss::kMse);

  // Closed form, computed independently.
  Matrix pred = kernels::matmul_serial(x, params.weights[0]);
  for (std::size_t i = 0; i < pred.rows; ++i)
    for (std::size_t j = 0; j < pred.cols; ++j) pred.at(i, j) += params.biases[0][j];
  Matrix resid(8, 2);
  for (std::size_t i = 0; i < resid.data.size(); ++i)
    resid.data[i] = pred.data[i] - y.data[i];
  const Matrix expected = kernels::matmul_tn_serial(x, resid);
  for (std::size_t i = 0; i < expected.data.size(); ++i) {
    CHECK(g.weights[0].data[i] == doctest::Approx(2.0 * expected.data[i] / 8.0).epsilon(1e-10));
  }
}

TEST_CASE("perfect mse fit has zero gradient") {
  const MlpSpec spec = small_spec({2, 2}, Activation::kRelu, OutputHead::kLinear);
  MlpParams params = init_params(spec, 41);
  Matrix x(1, 2);
  x.data = {0.3, -0.7};
  Matrix y = forward(params, spec, x);
  const MlpParams g = gradients(params, spec, x, TrainTargets::values(y), Loss::kMse);
  for (const auto& w : g.weights)
    for (double v : w.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
  for (const auto& b : g.biases)
    for (double v : b) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  Dataset data;
  Rng rng(51);
  for (int i = 0; i < 30; ++i) {
    data.add({rng.normal(), rng.normal()}, static_cast<int>(rng.uniform_int(2)));
  }
  data.class_count = 2;
  const MlpSpec spec = small_spec({2, 8, 2}, Activation::kRelu, OutputHead::kSoftmax);
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.seed = 52;
  const TrainResult a = train(data, spec, cfg);
  const TrainResult b = train(data, spec, cfg);
  CHECK(testutil::params_equal(a.params, b.params));
  CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("epochs=0 returns the initialization untouched") {
  Dataset data;
  data.add({1.0, 2.0}, 0);
  data.add({0.0, 1.0}, 1);
  data.class_count = 2;
  const MlpSpec spec = small_spec({2, 4, 2}, Activation::kRelu, OutputHead::kSoftmax);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 61;
  const TrainResult r = train(data, spec, cfg);
  CHECK(testutil::params_equal(r.params, init_params(spec, 61)));
  CHECK(r.loss_history.empty());
}

TEST_CASE("xor becomes separable with one hidden layer") {
  Dataset data;
  data.add({0.0, 0.0}, 0);
  data.add({1.0, 1.0}, 0);
  data.add({0.0, 1.0}, 1);
  data.add({1.0, 0.0}, 1);
  data.class_count = 2;
  const MlpSpec spec = small_spec({2, 8, 2}, Activation::kTanh, OutputHead::kSoftmax);
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.seed = 71;
  const TrainResult r = train(data, spec, cfg);
  const std::vector<int> preds = argmax_rows(forward(r.params, spec, data.to_matrix()));
  int hits = 0;
  const std::vector<int> want{0, 0, 1, 1};
  for (int i = 0; i < 4; ++i) hits += preds[i] == want[i];
  CHECK(hits >= 4 * 0.95);
}

TEST_CASE("a single sample is memorized to tiny loss") {
  Dataset data;
  data.add({0.5, -0.25, 1.0}, 2);
  data.class_count = 3;
  const MlpSpec spec = small_spec({3, 8, 3}, Activation::kTanh, OutputHead::kSoftmax);
  TrainConfig cfg;
  cfg.epochs = 600;
  cfg.learning_rate = 0.05;
  cfg.seed = 81;
  const TrainResult r = train(data, spec, cfg);
  CHECK(r.loss_history.back() < 1e-3);
}

TEST_CASE("empty dataset is rejected") {
  Dataset data;
  const MlpSpec spec = small_spec({2, 2}, Activation::kRelu, OutputHead::kSoftmax);
  CHECK_THROWS_AS(train(data, spec, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("loss history stays finite at lr 0.1 on unit-scale data") {
  Rng rng(91);
  Dataset data;
  for (int i = 0; i < 60; ++i) {
    data.add({rng.normal(), rng.normal(), rng.normal()}, static_cast<int>(rng.uniform_int(3)));
  }
  data.class_count = 3;
  const MlpSpec spec = small_spec({3, 16, 3}, Activation::kRelu, OutputHead::kSoftmax);
  for (Optimizer opt : {Optimizer::kSgd, Optimizer::kAdam}) {
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = 40;
    cfg.optimizer = opt;
    cfg.seed = 92;
    const TrainResult r = train(data, spec, cfg);
    for (double l : r.loss_history) CHECK(std::isfinite(l));
  }
}

TEST_CASE("sgd and adam both reduce the loss") {
  Rng rng(93);
  Dataset data;
  for (int i = 0; i < 80; ++i) {
    const int y = static_cast<int>(rng.uniform_int(2));
    data.add({rng.normal() + (y ? 2.0 : -2.0), rng.normal()}, y);
  }
  data.class_count = 2;
  const MlpSpec spec = small_spec({2, 8, 2}, Activation::kRelu, OutputHead::kSoftmax);
  for (Optimizer opt : {Optimizer::kSgd, Optimizer::kAdam}) {
    TrainConfig cfg;
    cfg.optimizer = opt;
    cfg.epochs = 50;
    cfg.seed = 94;
    const TrainResult r = train(data, spec, cfg);
    CHECK(r.loss_history.back() < 0.5 * r.loss_history.front());
  }
}

TEST_CASE("weight decay shrinks weight norms") {
  Rng rng(95);
  Dataset data;
  for (int i = 0; i < 40; ++i) {
    data.add({rng.normal(), rng.normal()}, static_cast<int>(rng.uniform_int(2)));
  }
  data.class_count = 2;
  const MlpSpec spec = small_spec({2, 8, 2}, Activation::kRelu, OutputHead::kSoftmax);
  auto weight_norm = [](const MlpParams& p) {
    double s = 0.0;
    for (const auto& w : p.weights)
      for (double v : w.data) s += v * v;
    return s;
  };
  TrainConfig plain;
  plain.epochs = 80;
  plain.seed = 96;
  TrainConfig decayed = plain;
  decayed.weight_decay = 0.1;
  CHECK(weight_norm(train(data, spec, decayed).params) <
        weight_norm(train(data, spec, plain).params));
}

TEST_CASE("checkpoint-style mirrored spec reverses widths") {
  const MlpSpec spec = small_spec({8, 32, 4}, Activation::kRelu, OutputHead::kSoftmax);
  const MlpSpec m = spec.mirrored(OutputHead::kLinear);
  CHECK(m.layer_widths == std::vector<std::size_t>{4, 32, 8});
  CHECK(m.output_head == OutputHead::kLinear);
}

TEST_CASE("argmax breaks ties toward the lowest class id") {
  Matrix m(1, 4);
  m.data = {0.5, 0.2, 0.5, 0.1};
  CHECK(argmax_rows(m)[0] == 0);
}
