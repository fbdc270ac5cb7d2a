#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "boxlab/dataset.hpp"
#include "test_util.hpp"

using namespace boxlab;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("make_problem is stratified and reproducible") {
  ProblemSpec spec;
  spec.class_count = 4;
  spec.train_size = 400;
  spec.seed = 7;
  const Problem a = make_problem(spec);
  const Problem b = make_problem(spec);

  for (int c = 0; c < 4; ++c) CHECK(a.train.class_indices(c).size() == 100);
  CHECK(a.train.size() == 400);

  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.samples[i].features == b.train.samples[i].features);
  }
}

TEST_CASE("member_eval points are literal training points") {
  ProblemSpec spec;
  spec.member_eval_size = 50;
  spec.seed = 8;
  const Problem p = make_problem(spec);
  std::set<std::vector<double>> train_feats;
  for (const auto& s : p.train.samples) train_feats.insert(s.features);
  for (const auto& s : p.member_eval.samples) {
    CHECK(train_feats.count(s.features) == 1);
  }
}

TEST_CASE("nonmember_eval shares no sample with train") {
  ProblemSpec spec;
  spec.seed = 9;
  const Problem p = make_problem(spec);
  std::set<std::vector<double>> train_feats;
  for (const auto& s : p.train.samples) train_feats.insert(s.features);
  for (const auto& s : p.nonmember_eval.samples) {
    CHECK(train_feats.count(s.features) == 0);
  }
}

TEST_CASE("two-class problem matches the analytic Bayes accuracy") {
  // Means at (+-3, 0), sigma 1: the optimal rule is the sign of x0 and its
  // accuracy is Phi(3) ~= 0.99865.
  ProblemSpec spec;
  spec.class_count = 2;
  spec.dim = 2;
  spec.circle_radius = 3.0;
  spec.class_std = 1.0;
  spec.nonmember_eval_size = 100000;
  spec.seed = 10;
  const Problem p = make_problem(spec);
  std::size_t hits = 0;
  for (const auto& s : p.nonmember_eval.samples) {
    const int pred = s.features[0] >= 0.0 ? 0 : 1;
    hits += pred == *s.label;
  }
  const double acc = static_cast<double>(hits) / p.nonmember_eval.size();
  const double phi3 = 0.5 * std::erfc(-3.0 / std::sqrt(2.0));
  CHECK(acc == doctest::Approx(phi3).epsilon(0.002));
}

TEST_CASE("split honors the ratio per class") {
  ProblemSpec spec;
  spec.class_count = 4;
  spec.train_size = 100;
  spec.seed = 11;
  const Problem p = make_problem(spec);
  const SplitResult r = split(p.train, 0.8, 12);
  CHECK(r.first.size() == 80);
  CHECK(r.second.size() == 20);
  for (int c = 0; c < 4; ++c) {
    CHECK(r.first.class_indices(c).size() == 20);
    CHECK(r.second.class_indices(c).size() == 5);
  }
  CHECK(r.degenerate_classes.empty());
}

TEST_CASE("split is disjoint, exhaustive and seed-stable") {
  ProblemSpec spec;
  spec.train_size = 97;  // odd sizes force rounding
  spec.seed = 13;
  const Problem p = make_problem(spec);
  const SplitResult a = split(p.train, 0.7, 14);
  const SplitResult b = split(p.train, 0.7, 14);
  CHECK(a.first.size() + a.second.size() == p.train.size());
  CHECK(a.first.size() == b.first.size());
  for (std::size_t i = 0; i < a.first.size(); ++i)
    CHECK(a.first.samples[i].features == b.first.samples[i].features);

  // Per-class proportions within one sample of the ratio.
  for (int c = 0; c < 4; ++c) {
    const double n_c = static_cast<double>(p.train.class_indices(c).size());
    const double got = static_cast<double>(a.first.class_indices(c).size());
    CHECK(std::abs(got - 0.7 * n_c) <= 1.0);
  }
}

TEST_CASE("ratio 0.5 on two-per-class data gives one sample each side") {
  Dataset d;
  d.add({0.0, 0.0}, 0);
  d.add({1.0, 0.0}, 0);
  d.add({0.0, 1.0}, 1);
  d.add({1.0, 1.0}, 1);
  d.class_count = 2;
  const SplitResult r = split(d, 0.5, 15);
  CHECK(r.first.class_indices(0).size() == 1);
  CHECK(r.first.class_indices(1).size() == 1);
  CHECK(r.second.class_indices(0).size() == 1);
  CHECK(r.second.class_indices(1).size() == 1);
}

TEST_CASE("singleton class goes whole to the larger side with a warning") {
  Dataset d;
  d.add({0.0}, 0);
  d.add({1.0}, 1);
  d.add({2.0}, 1);
  d.add({3.0}, 1);
  d.class_count = 2;
  const SplitResult r = split(d, 0.8, 16);
  CHECK(r.degenerate_classes == std::vector<int>{0});
  CHECK(r.first.class_indices(0).size() == 1);
  CHECK(r.second.class_indices(0).size() == 0);
}

TEST_CASE("split rejects out-of-range ratios") {
  Dataset d;
  d.add({0.0}, 0);
  CHECK_THROWS_AS(split(d, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split(d, 1.0, 1), ConfigError);
}

TEST_CASE("csv round trip is exact") {
  Dataset d;
  Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    d.add({rng.normal() * 1e-7, rng.normal() * 1e7, 1.0 / 3.0},
          i % 3 == 0 ? std::optional<int>{} : std::optional<int>{i % 4});
  }
  d.class_count = 4;
  const std::string path = temp_path("boxlab_roundtrip.csv");
  save_csv(d, path);
  const Dataset back = load_csv(path);
  REQUIRE(back.size() == d.size());
  CHECK(back.dim == d.dim);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.samples[i].features == d.samples[i].features);  // bitwise via %.17g
    CHECK(back.samples[i].label == d.samples[i].label);
  }
  std::remove(path.c_str());
}

TEST_CASE("header-only csv loads as an empty dataset with the right dim") {
  const std::string path = temp_path("boxlab_empty.csv");
  {
    std::ofstream out(path);
    out << "label,f0,f1,f2\n";
  }
  const Dataset d = load_csv(path);
  CHECK(d.empty());
  CHECK(d.dim == 3);
  std::remove(path.c_str());
}

TEST_CASE("ragged and non-numeric rows report the line number") {
  const std::string path = temp_path("boxlab_bad.csv");
  {
    std::ofstream out(path);
    out << "label,f0,f1\n0,1.0,2.0\n1,3.0\n";
  }
  try {
    load_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
  {
    std::ofstream out(path);
    out << "label,f0,f1\n0,abc,2.0\n";
  }
  CHECK_THROWS_AS(load_csv(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("mixed labeled and unlabeled rows keep labels optional") {
  const std::string path = temp_path("boxlab_mixed.csv");
  {
    std::ofstream out(path);
    out << "label,f0\n2,0.5\n,0.25\n";
  }
  const Dataset d = load_csv(path);
  REQUIRE(d.size() == 2);
  CHECK(d.samples[0].label == 2);
  CHECK_FALSE(d.samples[1].label.has_value());
  CHECK(d.class_count == 3);
  std::remove(path.c_str());
}
