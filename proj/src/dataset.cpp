#include "boxlab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace boxlab {

void Dataset::add(std::vector<double> features, std::optional<int> label) {
  if (!samples.empty() && features.size() != dim) {
    throw ShapeError("sample dim " + std::to_string(features.size()) +
                     " does not match dataset dim " + std::to_string(dim));
  }
  if (samples.empty() && dim == 0) dim = features.size();
  samples.push_back(Sample{std::move(features), label});
}

Matrix Dataset::to_matrix() const {
  Matrix m(samples.size(), dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy(samples[i].features.begin(), samples[i].features.end(), m.row(i));
  }
  return m;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.label) throw std::invalid_argument("dataset contains unlabeled samples");
    out.push_back(*s.label);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_indices(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label && *samples[i].label == label) out.push_back(i);
  }
  return out;
}

std::vector<int> Dataset::present_classes() const {
  std::set<int> seen;
  for (const auto& s : samples) {
    if (s.label) seen.insert(*s.label);
  }
  return {seen.begin(), seen.end()};
}

void ProblemSpec::validate() const {
  if (class_count < 2) throw ConfigError("problem: class_count must be >= 2");
  if (dim < 2) throw ConfigError("problem: dim must be >= 2");
  if (class_std <= 0.0) throw ConfigError("problem: class_std must be > 0");
  if (!class_means.empty()) {
    if (static_cast<int>(class_means.size()) != class_count)
      throw ConfigError("problem: class_means count must equal class_count");
    for (const auto& m : class_means) {
      if (m.size() != dim) throw ConfigError("problem: class mean dim mismatch");
    }
  }
}

std::vector<std::vector<double>> ProblemSpec::means() const {
  if (!class_means.empty()) return class_means;
  std::vector<std::vector<double>> out(class_count, std::vector<double>(dim, 0.0));
  for (int c = 0; c < class_count; ++c) {
    const double angle = 2.0 * M_PI * c / class_count;
    out[c][0] = circle_radius * std::cos(angle);
    out[c][1] = circle_radius * std::sin(angle);
  }
  return out;
}

namespace {

// Even per-class allocation of `total`; remainders go to the lowest ids.
std::vector<std::size_t> stratified_counts(std::size_t total, int classes) {
  std::vector<std::size_t> counts(classes, total / classes);
  for (std::size_t r = 0; r < total % classes; ++r) counts[r] += 1;
  return counts;
}

Dataset draw_mixture(const std::vector<std::vector<double>>& means, double sigma,
                     std::size_t dim, const std::vector<std::size_t>& per_class, Rng& rng) {
  Dataset out;
  out.dim = dim;
  out.class_count = static_cast<int>(means.size());
  for (int c = 0; c < out.class_count; ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      std::vector<double> x(dim);
      for (std::size_t k = 0; k < dim; ++k) x[k] = rng.normal(means[c][k], sigma);
      out.add(std::move(x), c);
    }
  }
  return out;
}

}  // namespace

Problem make_problem(const ProblemSpec& spec) {
  spec.validate();
  if (spec.train_size < 1 || spec.member_eval_size < 1 || spec.nonmember_eval_size < 1)
    throw ConfigError("problem: all sizes must be >= 1");

  const auto means = spec.means();
  Rng rng(spec.seed);
  Rng train_rng = rng.child(1);
  Rng member_rng = rng.child(2);
  Rng nonmember_rng = rng.child(3);

  Problem p;
  p.train = draw_mixture(means, spec.class_std, spec.dim,
                         stratified_counts(spec.train_size, spec.class_count), train_rng);

  // Members are literal training points.
  std::vector<std::size_t> idx(p.train.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[member_rng.uniform_int(i)]);
  }
  const std::size_t m = std::min<std::size_t>(spec.member_eval_size, idx.size());
  p.member_eval.dim = spec.dim;
  p.member_eval.class_count = spec.class_count;
  for (std::size_t i = 0; i < m; ++i) p.member_eval.samples.push_back(p.train.samples[idx[i]]);

  p.nonmember_eval =
      draw_mixture(means, spec.class_std, spec.dim,
                   stratified_counts(spec.nonmember_eval_size, spec.class_count), nonmember_rng);
  return p;
}

SplitResult split(const Dataset& dataset, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split: ratio must be in (0, 1)");
  Rng rng(seed);
  SplitResult res;
  res.first.dim = res.second.dim = dataset.dim;
  res.first.class_count = res.second.class_count = dataset.class_count;

  // Unlabeled samples are treated as one extra bucket.
  std::vector<int> buckets = dataset.present_classes();
  bool has_unlabeled = false;
  for (const auto& s : dataset.samples) {
    if (!s.label) has_unlabeled = true;
  }

  auto handle_bucket = [&](const std::vector<std::size_t>& members, int bucket_label) {
    std::vector<std::size_t> idx = members;
    Rng brng = rng.child(static_cast<std::uint64_t>(bucket_label + 1));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[brng.uniform_int(i)]);
    }
    if (idx.size() < 2 && bucket_label >= 0) {
      res.degenerate_classes.push_back(bucket_label);
      Dataset& bigger = ratio >= 0.5 ? res.first : res.second;
      for (std::size_t i : idx) bigger.samples.push_back(dataset.samples[i]);
      return;
    }
    const std::size_t take = static_cast<std::size_t>(std::llround(ratio * idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < take ? res.first : res.second).samples.push_back(dataset.samples[idx[i]]);
    }
  };

  for (int c : buckets) handle_bucket(dataset.class_indices(c), c);
  if (has_unlabeled) {
    std::vector<std::size_t> un;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (!dataset.samples[i].label) un.push_back(i);
    }
    handle_bucket(un, -1);
  }
  return res;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  ++line_no;
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "label")
    throw ParseError("header must start with 'label'", line_no);
  const std::size_t dim = header.size() - 1;

  Dataset ds;
  ds.dim = dim;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1)
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    std::optional<int> label;
    if (!fields[0].empty()) {
      int v = 0;
      const auto* first = fields[0].data();
      const auto* last = first + fields[0].size();
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || p != last) throw ParseError("bad label '" + fields[0] + "'", line_no);
      label = v;
      max_label = std::max(max_label, v);
    }
    std::vector<double> feats(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const std::string& f = fields[k + 1];
      char* end = nullptr;
      feats[k] = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(feats[k]))
        throw ParseError("bad feature value '" + f + "'", line_no);
    }
    ds.add(std::move(feats), label);
  }
  ds.class_count = max_label + 1;
  return ds;
}

void save_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "label";
  for (std::size_t k = 0; k < dataset.dim; ++k) out << ",f" << k;
  out << "\n";
  for (const auto& s : dataset.samples) {
    if (s.label) out << *s.label;
    for (double v : s.features) out << "," << format_double(v);
    out << "\n";
  }
}

}  // namespace boxlab
