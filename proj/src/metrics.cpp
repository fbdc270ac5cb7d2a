#include "boxlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>

namespace boxlab {
namespace metrics {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || predictions.empty())
    throw std::invalid_argument("accuracy: size mismatch or empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double agreement(const std::vector<int>& preds_a, const std::vector<int>& preds_b) {
  return accuracy(preds_a, preds_b);
}

double f1(const std::vector<int>& predictions, const std::vector<int>& labels,
          int positive_class) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("f1: size mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_pos = predictions[i] == positive_class;
    const bool is_pos = labels[i] == positive_class;
    if (pred_pos && is_pos) ++tp;
    if (pred_pos && !is_pos) ++fp;
    if (!pred_pos && is_pos) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(tp) / denom;
}

double roc_auc(const ScoredOutcomes& outcomes) {
  if (outcomes.positive_scores.empty() || outcomes.negative_scores.empty())
    throw std::invalid_argument("roc_auc: both score sets must be nonempty");
  std::vector<double> neg = outcomes.negative_scores;
  std::sort(neg.begin(), neg.end());
  std::uint64_t greater = 0, ties = 0;
  for (double p : outcomes.positive_scores) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    greater += static_cast<std::uint64_t>(lo - neg.begin());
    ties += static_cast<std::uint64_t>(hi - lo);
  }
  const double pairs =
      static_cast<double>(outcomes.positive_scores.size()) * static_cast<double>(neg.size());
  return static_cast<double>(2 * greater + ties) / (2.0 * pairs);
}

double tpr_at_fpr(const ScoredOutcomes& outcomes, double fpr_level) {
  if (outcomes.positive_scores.empty() || outcomes.negative_scores.empty())
    throw std::invalid_argument("tpr_at_fpr: both score sets must be nonempty");
  if (!(fpr_level > 0.0 && fpr_level < 1.0))
    throw std::invalid_argument("tpr_at_fpr: level must be in (0,1)");
  std::vector<double> neg = outcomes.negative_scores;
  std::sort(neg.begin(), neg.end(), std::greater<>());
  const std::size_t allowed =
      static_cast<std::size_t>(std::floor(fpr_level * static_cast<double>(neg.size())));
  if (allowed >= neg.size()) return 1.0;
  // The threshold is the infimum of values admitting at most `allowed` false
  // positives, i.e. just above neg[allowed]; positives must beat it strictly.
  const double cut = neg[allowed];
  std::size_t tp = 0;
  for (double p : outcomes.positive_scores) {
    if (p > cut) ++tp;
  }
  return static_cast<double>(tp) / static_cast<double>(outcomes.positive_scores.size());
}

double mse(const Matrix& originals, const Matrix& reconstructions) {
  if (!originals.same_shape(reconstructions) || originals.rows == 0)
    throw std::invalid_argument("mse: shape mismatch or empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < originals.rows; ++i) {
    double row_err = 0.0;
    for (std::size_t j = 0; j < originals.cols; ++j) {
      const double d = originals.at(i, j) - reconstructions.at(i, j);
      row_err += d * d;
    }
    total += row_err / static_cast<double>(originals.cols);
  }
  return total / static_cast<double>(originals.rows);
}

void HistogramSpec::validate() const {
  if (bins_per_dim < 2) throw std::invalid_argument("histogram: bins_per_dim must be >= 2");
  if (smoothing_alpha <= 0.0)
    throw std::invalid_argument("histogram: smoothing_alpha must be > 0");
  for (const auto& [lo, hi] : ranges) {
    if (!(lo < hi)) throw std::invalid_argument("histogram: range lo must be < hi");
  }
}

namespace {

using Cell = std::vector<std::uint16_t>;

std::map<Cell, std::size_t> bin_points(const Matrix& pts, const HistogramSpec& spec) {
  std::map<Cell, std::size_t> counts;
  const std::size_t bins = spec.bins_per_dim;
  Cell cell(pts.cols);
  for (std::size_t i = 0; i < pts.rows; ++i) {
    for (std::size_t d = 0; d < pts.cols; ++d) {
      const auto [lo, hi] =
          spec.ranges.empty() ? std::pair<double, double>{0.0, 1.0} : spec.ranges[d];
      double t = (pts.at(i, d) - lo) / (hi - lo);
      long b = static_cast<long>(std::floor(t * static_cast<double>(bins)));
      b = std::clamp<long>(b, 0, static_cast<long>(bins) - 1);
      cell[d] = static_cast<std::uint16_t>(b);
    }
    ++counts[cell];
  }
  return counts;
}

}  // namespace

double kl_histogram(const Matrix& samples_p, const Matrix& samples_q, const HistogramSpec& spec) {
  spec.validate();
  if (samples_p.rows == 0 || samples_q.rows == 0)
    throw std::invalid_argument("kl_histogram: both sample sets must be nonempty");
  if (samples_p.cols != samples_q.cols)
    throw std::invalid_argument("kl_histogram: dimension mismatch");
  if (!spec.ranges.empty() && spec.ranges.size() != samples_p.cols)
    throw std::invalid_argument("kl_histogram: ranges must cover every dimension");

  const auto p_counts = bin_points(samples_p, spec);
  const auto q_counts = bin_points(samples_q, spec);

  const double total_cells = std::pow(static_cast<double>(spec.bins_per_dim),
                                      static_cast<double>(samples_p.cols));
  const double alpha = spec.smoothing_alpha;
  const double p_denom = static_cast<double>(samples_p.rows) + alpha * total_cells;
  const double q_denom = static_cast<double>(samples_q.rows) + alpha * total_cells;

  double kl = 0.0;
  std::size_t occupied = 0;
  auto visit = [&](const Cell& cell, std::size_t pc, std::size_t qc) {
    const double p = (static_cast<double>(pc) + alpha) / p_denom;
    const double q = (static_cast<double>(qc) + alpha) / q_denom;
    kl += p * std::log(p / q);
    (void)cell;
    ++occupied;
  };

  for (const auto& [cell, pc] : p_counts) {
    const auto it = q_counts.find(cell);
    visit(cell, pc, it == q_counts.end() ? 0 : it->second);
  }
  for (const auto& [cell, qc] : q_counts) {
    if (p_counts.find(cell) == p_counts.end()) visit(cell, 0, qc);
  }

  // Cells untouched by either set share one closed-form contribution.
  const double rest = total_cells - static_cast<double>(occupied);
  if (rest > 0.0) {
    kl += rest * (alpha / p_denom) * std::log((alpha / p_denom) / (alpha / q_denom));
  }
  return std::max(kl, 0.0);
}

}  // namespace metrics
}  // namespace boxlab
