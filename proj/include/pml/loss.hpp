#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pml/density_map.hpp"
#include "pml/resolution_set.hpp"

namespace pml {

using MapBatch = std::span<const DensityMap>;

/// Default guard added inside every logarithm: log(x + eps).
inline constexpr double kDefaultEpsilon = 1e-12;

/// Every term of the multi-resolution loss for one batch.
struct LossBreakdown {
  int prediction_level = 0;
  int n = 0;
  std::map<int, double> l2_per_level;                   // level -> L2^i
  std::map<std::pair<int, int>, double> ldiff_per_pair;  // (j-1, j) -> Ldiff
  double pml = 0.0;
  double regularizer = 0.0;  // L2^L, zero when the regularizer is off
  double total = 0.0;        // pml + regularizer
  std::map<int, double> sigma_sq;  // index j -> optimal sigma_j^2
  bool sigma_degenerate = false;   // some sigma^2 relied on the eps guard
  double epsilon = kDefaultEpsilon;
};

struct AlphaCoefficients {
  int n = 1;
  std::vector<double> alpha;  // alpha_0 .. alpha_n
};

struct SigmaEstimate {
  std::map<int, double> sigma_sq;
  bool degenerate = false;
};

/// Throws InvalidArgument unless both batches are non-empty, the same length,
/// and each pair shares a level.
void check_batches(MapBatch preds, MapBatch gts);

/// Batch mean of ||S_i(pred) - S_i(gt)||^2, S_i = sum-pooling to level i.
double l2_level(MapBatch preds, MapBatch gts, int level);

/// Batch mean of ||r - r_hat||^2 for the residuals between `coarse` and
/// `fine`. Non-negative by construction.
double l_diff_pair(MapBatch preds, MapBatch gts, int coarse, int fine);

/// Consecutive-level difference loss between levels j-1 and j.
double l_diff(MapBatch preds, MapBatch gts, int j);

/// The same quantity from two L2 values: L2^fine - 4^(coarse-fine) L2^coarse.
/// Can round to a tiny negative number.
double l_diff_from_l2(double l2_fine, double l2_coarse, int coarse, int fine);

/// Unique solution of (4^j - 4^(j-1)) * sum_{k>=j} alpha_k = 1 (j = 1..n)
/// together with sum alpha = 1, by back-substitution.
AlphaCoefficients alpha_coefficients(int n);

/// sum_k alpha_k [ sum_{j<=k} (4^j - 4^(j-1)) log ldiff_j + log l2_base ].
/// With alpha from alpha_coefficients() this collapses to
/// log l2_base + sum_j log ldiff_j.
double reweighted_log_terms(const AlphaCoefficients& a, double l2_base,
                            std::span<const double> ldiff);

/// log(L2^0 + eps) + sum_{j=1..n} log(Ldiff^{j-1,j} + eps). The returned
/// breakdown has regularizer = 0 and total = pml.
LossBreakdown pml_loss(MapBatch preds, MapBatch gts, int n,
                       double epsilon = kDefaultEpsilon);

/// pml_loss plus the un-logged full-resolution L2 regularizer; fills sigma_sq.
/// `with_regularizer = false` keeps the PML part only.
LossBreakdown total_loss(MapBatch preds, MapBatch gts, int n,
                         double epsilon = kDefaultEpsilon,
                         bool with_regularizer = true);

/// d(total_loss)/d(pred) for every predicted cell, one map per batch item.
std::vector<DensityMap> loss_gradient(MapBatch preds, MapBatch gts, int n,
                                      double epsilon = kDefaultEpsilon,
                                      bool with_regularizer = true);

/// Gradient of plain L2 at the prediction level: 2 (pred - gt) / B.
std::vector<DensityMap> l2_gradient(MapBatch preds, MapBatch gts);

/// Central-difference check of loss_gradient. Each cell is stepped by
/// 1e-6 * max(1, |value|); the error is max |analytic - numeric| divided by
/// max |numeric| over all cells of the batch.
struct GradientCheck {
  double max_abs_error = 0.0;
  double gradient_scale = 0.0;
  double relative_error = 0.0;
  std::size_t entries = 0;
};

GradientCheck check_gradient(MapBatch preds, MapBatch gts, int n,
                             double epsilon = kDefaultEpsilon,
                             bool with_regularizer = true);

/// Closed-form variance maximizers for the sub-levels n_0..n_k of `levels`:
///   sigma_0^2 = 4^-n_0 L2^n_0,
///   sigma_j^2 = Ldiff^{n_(j-1), n_j} / (4^n_j - 4^n_(j-1)).
/// With breakdown.epsilon > 0 each loss value x is replaced by x + eps and
/// `degenerate` is set when x < eps. With epsilon == 0 a non-positive value
/// throws DegenerateVarianceError.
SigmaEstimate optimal_sigma(const LossBreakdown& breakdown,
                            const ResolutionSet& levels);

/// Flat key/value view: l2.<i>, ldiff.<a>-<b>, sigma_sq.<j>, pml,
/// regularizer, total, epsilon, sigma_degenerate.
std::vector<std::pair<std::string, double>> flat_entries(const LossBreakdown& b);
std::string to_text(const LossBreakdown& b);
std::string to_json(const LossBreakdown& b);

}  // namespace pml
