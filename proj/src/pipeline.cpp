#include "boxlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace boxlab {

double norm_p(const std::vector<double>& v, NormOrder p) {
  switch (p) {
    case NormOrder::kL1: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return s;
    }
    case NormOrder::kL2: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    }
    case NormOrder::kLinf: {
      double s = 0.0;
      for (double x : v) s = std::max(s, std::abs(x));
      return s;
    }
  }
  return 0.0;
}

void PipelineConfig::validate() const {
  if (delta0 <= 0.0) throw ConfigError("pipeline: delta0 must be > 0");
  if (step <= 0.0) throw ConfigError("pipeline: step must be > 0");
  if (shell_samples < 1) throw ConfigError("pipeline: shell_samples must be >= 1");
  if (max_rounds < 1) throw ConfigError("pipeline: max_rounds must be >= 1");
  if (anchors_per_class < 1) throw ConfigError("pipeline: anchors_per_class must be >= 1");
  if (filter_sigma <= 0.0) throw ConfigError("pipeline: filter_sigma must be > 0");
}

namespace {

// Point at norm-p radius r around the anchor, direction from a normalized
// Gaussian draw.
void shell_point(const std::vector<double>& anchor, double radius, NormOrder p, Rng& rng,
                 std::vector<double>& out) {
  const std::size_t d = anchor.size();
  out.resize(d);
  double norm = 0.0;
  do {
    for (std::size_t k = 0; k < d; ++k) out[k] = rng.normal();
    norm = norm_p(out, p);
  } while (norm == 0.0);
  for (std::size_t k = 0; k < d; ++k) out[k] = anchor[k] + radius * out[k] / norm;
}

}  // namespace

Step1Result step1_generate(Target& target, Generator& generator, const PipelineConfig& cfg) {
  cfg.validate();
  if (generator.dim() != target.dim() || generator.classes() != target.classes())
    throw ShapeError("step1: generator and target disagree on dim or classes");

  Step1Result res;
  res.data.dim = target.dim();
  res.data.class_count = target.classes();
  for (int c = 0; c < target.classes(); ++c) {
    std::size_t kept = 0, drawn = 0;
    const std::size_t budget = cfg.max_generate_attempts * cfg.per_class_n;
    while (kept < cfg.per_class_n && drawn < budget) {
      const std::size_t want = std::min(cfg.per_class_n - kept, budget - drawn);
      Dataset batch = generator.generate(c, want);
      drawn += batch.size();
      if (batch.empty()) break;
      const std::vector<int> labels = target.query_label(batch.to_matrix());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (labels[i] == c) {
          res.data.samples.push_back(batch.samples[i]);
          ++kept;
        }
      }
    }
    res.report.kept_per_class[c] = kept;
    res.report.discarded_per_class[c] = drawn - kept;
    if (kept == 0 && cfg.per_class_n > 0) {
      throw StarvationError("step1: class " + std::to_string(c) +
                                " produced no sample the target accepts",
                            c);
    }
  }
  return res;
}

Step1Result step1_random_baseline(Target& target, RandomNoiseGenerator& generator,
                                  const PipelineConfig& cfg) {
  cfg.validate();
  if (generator.dim() != target.dim())
    throw ShapeError("step1: generator and target disagree on dim");
  Step1Result res;
  const std::size_t total = cfg.per_class_n * static_cast<std::size_t>(target.classes());
  Dataset noise = generator.random_noise_baseline(total);
  res.data.dim = target.dim();
  res.data.class_count = target.classes();
  if (total == 0) return res;
  const std::vector<int> labels = target.query_label(noise.to_matrix());
  for (std::size_t i = 0; i < noise.size(); ++i) {
    res.data.add(std::move(noise.samples[i].features), labels[i]);
    ++res.report.kept_per_class[labels[i]];
  }
  return res;
}

namespace {

struct AnchorOutcome {
  std::vector<Sample> points;
  std::size_t rounds = 0;
};

AnchorOutcome probe_anchor(Target& target, const std::vector<double>& anchor, int class_id,
                           const PipelineConfig& cfg, Rng rng) {
  AnchorOutcome out;
  std::vector<double> x;
  for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
    const double inner = round == 0 ? 0.0 : cfg.delta0 + (round - 1) * cfg.step;
    const double outer = cfg.delta0 + round * cfg.step;
    Matrix probes(cfg.shell_samples, anchor.size());
    for (std::size_t i = 0; i < cfg.shell_samples; ++i) {
      const double r = rng.uniform_open_lo(inner, outer);
      shell_point(anchor, r, cfg.norm_order, rng, x);
      std::copy(x.begin(), x.end(), probes.row(i));
    }
    const std::vector<int> labels = target.query_label(probes);
    const bool crossed =
        std::any_of(labels.begin(), labels.end(), [&](int l) { return l != class_id; });
    if (crossed) break;  // the crossing round contributes nothing
    for (std::size_t i = 0; i < cfg.shell_samples; ++i) {
      std::vector<double> feat(probes.row(i), probes.row(i) + probes.cols);
      out.points.push_back(Sample{std::move(feat), class_id});
    }
    ++out.rounds;
  }
  return out;
}

}  // namespace

AugmentResult augment(Target& target, const Dataset& d_a, const PipelineConfig& cfg) {
  cfg.validate();
  if (d_a.dim != target.dim()) throw ShapeError("augment: dataset dim != target dim");

  const std::vector<int> classes = d_a.present_classes();
  for (int c : classes) {
    if (d_a.class_indices(c).empty())
      throw std::invalid_argument("augment: class " + std::to_string(c) + " is empty");
  }

  Rng root(cfg.seed);
  // One slot per (class, anchor); filled on any schedule, concatenated in order.
  std::vector<std::vector<AnchorOutcome>> outcomes(classes.size());
  std::vector<std::vector<std::vector<double>>> anchors(classes.size());

  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const int c = classes[ci];
    const auto idx = d_a.class_indices(c);
    Rng pick = root.child(Rng::mix(1, static_cast<std::uint64_t>(c)));
    anchors[ci].reserve(cfg.anchors_per_class);
    for (std::size_t a = 0; a < cfg.anchors_per_class; ++a) {
      anchors[ci].push_back(d_a.samples[idx[pick.uniform_int(idx.size())]].features);
    }
    outcomes[ci].resize(cfg.anchors_per_class);
  }

  const bool parallel = cfg.parallel_classes && target.stateless_queries();
  const std::int64_t n_classes = static_cast<std::int64_t>(classes.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t ci = 0; ci < n_classes; ++ci) {
    const int c = classes[ci];
    for (std::size_t a = 0; a < cfg.anchors_per_class; ++a) {
      Rng stream = root.child(Rng::mix(2 + static_cast<std::uint64_t>(c), a));
      outcomes[ci][a] = probe_anchor(target, anchors[ci][a], c, cfg, stream);
    }
  }

  AugmentResult res;
  res.data = d_a;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    for (std::size_t a = 0; a < cfg.anchors_per_class; ++a) {
      const auto& oc = outcomes[ci][a];
      res.report.rounds_per_anchor[{classes[ci], static_cast<int>(a)}] = oc.rounds;
      res.report.added_per_class[classes[ci]] += oc.points.size();
      for (const auto& s : oc.points) res.data.samples.push_back(s);
    }
  }
  return res;
}

std::vector<bool> three_sigma_outliers(const std::vector<double>& distances, double sigma_factor,
                                       bool two_sided) {
  std::vector<bool> flags(distances.size(), false);
  if (distances.size() < 2) return flags;
  const double n = static_cast<double>(distances.size());
  const double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
  double var = 0.0;
  for (double d : distances) var += (d - mean) * (d - mean);
  var /= n;  // population variance
  const double stddev = std::sqrt(var);
  if (stddev == 0.0) return flags;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double dev = distances[i] - mean;
    flags[i] = two_sided ? std::abs(dev) > sigma_factor * stddev : dev > sigma_factor * stddev;
  }
  return flags;
}

FilterResult filter(Target& target, const Dataset& d_aux, const PipelineConfig& cfg) {
  cfg.validate();
  if (target.mode() != QueryMode::kConfidence)
    throw CapabilityError("filter: needs confidence vectors, target is label-only");

  const std::vector<int> classes = d_aux.present_classes();
  std::vector<std::vector<std::size_t>> members(classes.size());
  std::vector<Matrix> outputs(classes.size());
  std::vector<std::vector<double>> centroids(classes.size());

  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    members[ci] = d_aux.class_indices(classes[ci]);
    if (members[ci].empty())
      throw std::invalid_argument("filter: class " + std::to_string(classes[ci]) + " is empty");
    Matrix batch(members[ci].size(), d_aux.dim);
    for (std::size_t i = 0; i < members[ci].size(); ++i) {
      const auto& f = d_aux.samples[members[ci][i]].features;
      std::copy(f.begin(), f.end(), batch.row(i));
    }
    outputs[ci] = target.query_confidence(batch);
    std::vector<double> cen(outputs[ci].cols, 0.0);
    for (std::size_t i = 0; i < outputs[ci].rows; ++i) {
      const double* r = outputs[ci].row(i);
      for (std::size_t j = 0; j < cen.size(); ++j) cen[j] += r[j];
    }
    for (double& v : cen) v /= static_cast<double>(outputs[ci].rows);
    centroids[ci] = std::move(cen);
  }

  FilterResult res;
  std::set<std::size_t> removed;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (i == k) continue;
      std::vector<double> dist(outputs[k].rows);
      for (std::size_t j = 0; j < outputs[k].rows; ++j) {
        double s = 0.0;
        const double* r = outputs[k].row(j);
        for (std::size_t d = 0; d < centroids[i].size(); ++d) {
          const double diff = centroids[i][d] - r[d];
          s += diff * diff;
        }
        dist[j] = std::sqrt(s);
      }
      const std::vector<bool> flags =
          three_sigma_outliers(dist, cfg.filter_sigma, cfg.filter_two_sided);

      FilterPairStats stats;
      stats.centroid_class = classes[i];
      stats.other_class = classes[k];
      const double n = static_cast<double>(dist.size());
      stats.mean_distance = std::accumulate(dist.begin(), dist.end(), 0.0) / n;
      double var = 0.0;
      for (double d : dist) var += (d - stats.mean_distance) * (d - stats.mean_distance);
      stats.std_distance = std::sqrt(var / n);
      for (std::size_t j = 0; j < flags.size(); ++j) {
        if (flags[j]) {
          removed.insert(members[k][j]);
          ++stats.flagged;
        }
      }
      res.report.pairs.push_back(stats);
    }
  }

  res.data.dim = d_aux.dim;
  res.data.class_count = d_aux.class_count;
  for (std::size_t i = 0; i < d_aux.size(); ++i) {
    if (removed.count(i)) continue;
    res.data.samples.push_back(d_aux.samples[i]);
    if (d_aux.samples[i].label) ++res.report.kept_per_class[*d_aux.samples[i].label];
  }
  res.report.removed_ids.assign(removed.begin(), removed.end());
  return res;
}

std::string FilterReport::to_json() const {
  nlohmann::json j;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : pairs) {
    j["pairs"].push_back({{"centroid_class", p.centroid_class},
                          {"other_class", p.other_class},
                          {"mean_distance", p.mean_distance},
                          {"std_distance", p.std_distance},
                          {"flagged", p.flagged}});
  }
  j["removed_ids"] = removed_ids;
  nlohmann::json kept = nlohmann::json::object();
  for (const auto& [c, n] : kept_per_class) kept[std::to_string(c)] = n;
  j["kept_per_class"] = kept;
  return j.dump(2);
}

}  // namespace boxlab
