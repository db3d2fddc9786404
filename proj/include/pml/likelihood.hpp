#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pml/loss.hpp"
#include "pml/resolution_set.hpp"

namespace pml {

/// Loss values a resolution set needs: L2 at n_0 and the residual difference
/// loss for every adjacent pair (n_(j-1), n_j) of sub-levels. Values are
/// stored raw; evaluators add `epsilon` inside their logarithms.
struct LevelStatistics {
  ResolutionSet levels{{0}};
  double l2_base = 0.0;
  std::vector<double> ldiff;  // size k for sub-levels n_0..n_k
  double epsilon = kDefaultEpsilon;
};

struct PairTerm {
  int coarse = 0;
  int fine = 0;
  double ldiff = 0.0;
  double weight = 0.0;        // 4^fine - 4^coarse
  double contribution = 0.0;  // -weight/2 * log(4^fine (ldiff+eps) / weight)
};

/// Relative log-likelihood (the localization term is taken as zero).
struct LikelihoodReport {
  ResolutionSet resolution_set{{0}};
  double loglik = 0.0;
  std::vector<PairTerm> terms;
  double base_term = 0.0;      // -4^n_0 / 2 * log(L2^n_0 + eps)
  double constant_part = 0.0;  // -((-1 + 2 pi) / 2) * 4^n_k
};

/// Requires at least two levels with the last equal to the prediction level.
LevelStatistics level_statistics(MapBatch preds, MapBatch gts,
                                 const ResolutionSet& levels,
                                 double epsilon = kDefaultEpsilon);

/// Variance-maximized likelihood in closed form, evaluated term by term
/// from precomputed statistics.
LikelihoodReport profile_log_likelihood(const LevelStatistics& stats);

LikelihoodReport log_likelihood(MapBatch preds, MapBatch gts,
                                const ResolutionSet& levels,
                                double epsilon = kDefaultEpsilon);

/// Closed form for the dense set {0..n} ∪ {L}, where every pair weight
/// ratio 4^j / (4^j - 4^(j-1)) is 4/3. Requires 0 <= n < L.
LikelihoodReport special_case_likelihood(MapBatch preds, MapBatch gts, int n,
                                         double epsilon = kDefaultEpsilon);

/// Likelihood at explicit variances (sigma index j = 0..k), before the
/// variances are maximized out. Sums over every adjacent sub-level pair.
double marginal_log_likelihood(const LevelStatistics& stats,
                               const std::map<int, double>& sigma_sq);

struct TheoremTrial {
  int trial = 0;
  ResolutionSet sparse{{0}};
  double loglik_sparse = 0.0;
  double loglik_dense = 0.0;
  double diff = 0.0;  // dense - sparse
  bool violated = false;
};

struct TheoremReport {
  int prediction_level = 0;
  int nk = 0;
  std::uint64_t seed = 0;
  double slack = 1e-9;
  std::vector<TheoremTrial> trials;
  int violations = 0;
};

/// For each trial (seeded by seed and trial index) draws a random batch and a
/// random sparse set {subset of 0..nk-1} ∪ {nk, L}, then compares its
/// likelihood with the dense set {0..nk} ∪ {L} on the same batch.
/// Requires trials >= 1 and 0 < nk < L.
TheoremReport verify_theorem(int trials, std::uint64_t seed, int prediction_level,
                             int nk, unsigned threads = 1,
                             double slack = 1e-9);

/// CSV with header trial,loglik_N,loglik_Nprime,diff,violated.
std::string theorem_csv(const TheoremReport& report);

}  // namespace pml
