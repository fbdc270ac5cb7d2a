#pragma once

#include <map>
#include <vector>

#include "boxlab/matrix.hpp"

namespace boxlab {
namespace metrics {

// Fraction of positions where the two sequences agree.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);
double agreement(const std::vector<int>& preds_a, const std::vector<int>& preds_b);

// Binary F1 for the given positive class; 0 when precision+recall is 0.
double f1(const std::vector<int>& predictions, const std::vector<int>& labels,
          int positive_class);

// Member scores vs non-member scores for the ranking metrics.
struct ScoredOutcomes {
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
};

// Mann-Whitney statistic: (#pairs pos>neg + 0.5 * #ties) / (|pos|*|neg|).
double roc_auc(const ScoredOutcomes& outcomes);

// TPR at the smallest threshold whose empirical FPR is <= fpr_level, with the
// decision rule "score >= threshold => positive" and no interpolation.
double tpr_at_fpr(const ScoredOutcomes& outcomes, double fpr_level);

// Mean over samples of the per-dimension-averaged squared error.
double mse(const Matrix& originals, const Matrix& reconstructions);

// Discretization for the empirical KL estimate. The default range covers
// simplex coordinates; pass explicit ranges for anything else.
struct HistogramSpec {
  std::size_t bins_per_dim = 10;
  std::vector<std::pair<double, double>> ranges;  // per-dim; empty = [0,1] everywhere
  double smoothing_alpha = 1e-3;

  void validate() const;
};

// KL(p || q) between additive-smoothed histograms of the two point sets.
// Each row is one point; both sets must share the dimension. Cells outside
// the configured range clamp to the edge bins. Sparse storage: only occupied
// cells are walked, the (huge) all-empty remainder is added in closed form.
double kl_histogram(const Matrix& samples_p, const Matrix& samples_q, const HistogramSpec& spec);

}  // namespace metrics
}  // namespace boxlab
