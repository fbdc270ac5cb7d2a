#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "boxlab/metrics.hpp"
#include "boxlab/rng.hpp"
#include "test_util.hpp"

using namespace boxlab;
using namespace boxlab::metrics;

TEST_CASE("accuracy and agreement basics") {
  CHECK(agreement({0, 1, 1, 0}, {0, 1, 1, 0}) == 1.0);
  CHECK(agreement({0, 1, 0, 1}, {1, 0, 1, 0}) == 0.0);
  CHECK(agreement({0, 1, 1, 0}, {0, 1, 0, 0}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(agreement({0}, {0, 1}), std::invalid_argument);
}

TEST_CASE("f1 on the documented cases") {
  CHECK(f1({1, 0, 1}, {1, 0, 1}, 1) == doctest::Approx(1.0));
  // All-negative predictions with positives present: recall 0 -> f1 0.
  CHECK(f1({0, 0, 0}, {1, 0, 1}, 1) == 0.0);
  // TP=2, FP=1, FN=1.
  CHECK(f1({1, 1, 1, 0}, {1, 1, 0, 1}, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("roc_auc on separable, identical and mixed score sets") {
  CHECK(roc_auc({{0.9, 0.8}, {0.7, 0.1}}) == doctest::Approx(1.0));
  CHECK(roc_auc({{0.3, 0.5, 0.9}, {0.3, 0.5, 0.9}}) == doctest::Approx(0.5));
  CHECK(roc_auc({{0.9, 0.6}, {0.7, 0.1}}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(roc_auc({{}, {0.1}}), std::invalid_argument);
}

TEST_CASE("roc_auc equals exhaustive pairwise counting on 1000 seeded score sets") {
  Rng rng(19);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t np = 1 + rng.uniform_int(8);
    const std::size_t nn = 1 + rng.uniform_int(8);
    std::vector<double> pos(np), neg(nn);
    // Quantized scores force plenty of ties.
    for (double& v : pos) v = static_cast<double>(rng.uniform_int(6)) / 4.0;
    for (double& v : neg) v = static_cast<double>(rng.uniform_int(6)) / 4.0;
    const double fast = roc_auc({pos, neg});
    const double slow = testutil::brute_force_auc(pos, neg);
    CHECK(fast == slow);  // bitwise: both are (2g+t)/2PN up to fp division
  }
}

TEST_CASE("roc_auc symmetry: auc(pos,neg) + auc(neg,pos) = 1 without ties") {
  Rng rng(20);
  std::vector<double> pos, neg;
  for (int i = 0; i < 9; ++i) pos.push_back(rng.uniform());
  for (int i = 0; i < 7; ++i) neg.push_back(rng.uniform());
  CHECK(roc_auc({pos, neg}) + roc_auc({neg, pos}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tpr_at_fpr on fully separated scores is 1 at any level") {
  ScoredOutcomes o{{0.8, 0.9, 0.95}, {0.1, 0.2, 0.3}};
  CHECK(tpr_at_fpr(o, 0.01) == 1.0);
  CHECK(tpr_at_fpr(o, 0.5) == 1.0);
}

TEST_CASE("tpr_at_fpr tracks the level when scores are exchangeable") {
  Rng rng(21);
  ScoredOutcomes o;
  for (int i = 0; i < 10000; ++i) {
    o.positive_scores.push_back(rng.normal());
    o.negative_scores.push_back(rng.normal());
  }
  const double tpr = tpr_at_fpr(o, 0.01);
  CHECK(tpr == doctest::Approx(0.01).epsilon(0.5));  // within 0.005 absolute
  CHECK(std::abs(tpr - 0.01) <= 0.005);
}

TEST_CASE("tpr_at_fpr is monotone in the level on 100 random score sets") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    ScoredOutcomes o;
    const std::size_t np = 2 + rng.uniform_int(40);
    const std::size_t nn = 2 + rng.uniform_int(40);
    for (std::size_t i = 0; i < np; ++i)
      o.positive_scores.push_back(rng.normal(0.4, 1.0));
    for (std::size_t i = 0; i < nn; ++i) o.negative_scores.push_back(rng.normal());
    double prev = 0.0;
    for (double level : {0.01, 0.05, 0.1, 0.25, 0.5, 0.9}) {
      const double tpr = tpr_at_fpr(o, level);
      CHECK(tpr >= prev);
      prev = tpr;
    }
  }
}

TEST_CASE("tpr_at_fpr validates inputs") {
  ScoredOutcomes o{{0.5}, {0.5}};
  CHECK_THROWS_AS(tpr_at_fpr(o, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tpr_at_fpr(o, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tpr_at_fpr({{}, {0.1}}, 0.1), std::invalid_argument);
}

TEST_CASE("mse basics") {
  Matrix a(2, 2), b(2, 2);
  a.data = {1, 2, 3, 4};
  b.data = {1, 2, 3, 4};
  CHECK(mse(a, b) == 0.0);
  for (double& v : b.data) v += 1.0;
  CHECK(mse(a, b) == doctest::Approx(1.0));

  Matrix x(2, 1), y(2, 1);
  x.data = {0.0, 2.0};
  y.data = {1.0, 2.0};
  CHECK(mse(x, y) == doctest::Approx(0.5));

  Matrix bad(3, 2);
  CHECK_THROWS_AS(mse(a, bad), std::invalid_argument);
}

TEST_CASE("kl_histogram is zero for identical samples") {
  Rng rng(23);
  Matrix pts = testutil::random_matrix(500, 2, rng, 0.2);
  HistogramSpec spec;
  spec.ranges = {{-1.0, 1.0}, {-1.0, 1.0}};
  CHECK(kl_histogram(pts, pts, spec) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kl_histogram recovers the closed-form Gaussian KL within 0.1") {
  // KL(N(0,1) || N(1,1)) = 0.5.
  Rng rng(24);
  const int n = 100000;
  Matrix p(n, 1), q(n, 1);
  for (int i = 0; i < n; ++i) {
    p.at(i, 0) = rng.normal();
    q.at(i, 0) = rng.normal() + 1.0;
  }
  HistogramSpec spec;
  spec.bins_per_dim = 50;
  spec.ranges = {{-5.0, 6.0}};
  const double kl = kl_histogram(p, q, spec);
  CHECK(kl == doctest::Approx(0.5).epsilon(0.2));
  CHECK(std::abs(kl - 0.5) <= 0.1);
}

TEST_CASE("kl_histogram is asymmetric on shifted Gaussians") {
  Rng rng(25);
  const int n = 20000;
  Matrix p(n, 1), q(n, 1);
  for (int i = 0; i < n; ++i) {
    p.at(i, 0) = rng.normal() * 0.5;
    q.at(i, 0) = rng.normal() + 1.5;
  }
  HistogramSpec spec;
  spec.bins_per_dim = 40;
  spec.ranges = {{-6.0, 6.0}};
  CHECK(kl_histogram(p, q, spec) != doctest::Approx(kl_histogram(q, p, spec)).epsilon(1e-6));
}

TEST_CASE("kl_histogram is nonnegative on adversarially close inputs") {
  Rng rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix p = testutil::random_matrix(50, 3, rng, 0.1);
    Matrix q = p;
    // Nudge a few points across bin edges.
    for (int k = 0; k < 5; ++k) q.data[rng.uniform_int(q.data.size())] += 0.05;
    HistogramSpec spec;
    spec.ranges = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
    CHECK(kl_histogram(p, q, spec) >= 0.0);
    CHECK(kl_histogram(q, p, spec) >= 0.0);
  }
}

TEST_CASE("kl_histogram validates inputs") {
  Matrix p(1, 2), q(1, 3);
  HistogramSpec spec;
  CHECK_THROWS_AS(kl_histogram(p, q, spec), std::invalid_argument);
  HistogramSpec bad;
  bad.bins_per_dim = 1;
  Matrix r(1, 2);
  CHECK_THROWS_AS(kl_histogram(p, r, bad), std::invalid_argument);
  HistogramSpec wrong_ranges;
  wrong_ranges.ranges = {{0.0, 1.0}};
  CHECK_THROWS_AS(kl_histogram(p, r, wrong_ranges), std::invalid_argument);
}
