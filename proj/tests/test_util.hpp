#pragma once

// Test-only oracles. Everything here is written directly from the
// definitions with naive loops and shares no code path with the library
// beyond the DensityMap container.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pml/density_map.hpp"
#include "pml/rng.hpp"

namespace pml::testing {

inline std::vector<double> to_vec(const DensityMap& m) {
  return {m.values().begin(), m.values().end()};
}

/// Sum-pools by visiting every fine cell and adding it to (r >> d, c >> d).
inline std::vector<double> naive_sum_pool(const DensityMap& m, int level) {
  const std::size_t side = m.side();
  const int shift = m.level() - level;
  const std::size_t out_side = std::size_t{1} << level;
  std::vector<double> out(out_side * out_side, 0.0);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c)
      out[(r >> shift) * out_side + (c >> shift)] += m(r, c);
  return out;
}

inline DensityMap naive_sum_pool_map(const DensityMap& m, int level) {
  return DensityMap(level, naive_sum_pool(m, level));
}

inline double naive_l2(const std::vector<DensityMap>& preds,
                       const std::vector<DensityMap>& gts, int level) {
  double total = 0.0;
  for (std::size_t b = 0; b < preds.size(); ++b) {
    auto p = naive_sum_pool(preds[b], level);
    auto g = naive_sum_pool(gts[b], level);
    for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - g[i]) * (p[i] - g[i]);
  }
  return total / static_cast<double>(preds.size());
}

/// Batch mean of ||r - r_hat||^2 with both residual maps built explicitly.
inline double naive_residual_ldiff(const std::vector<DensityMap>& preds,
                                   const std::vector<DensityMap>& gts, int coarse, int fine) {
  const std::size_t side = std::size_t{1} << fine;
  const int shift = fine - coarse;
  const std::size_t cs = std::size_t{1} << coarse;
  const double scale = std::pow(4.0, coarse - fine);
  double total = 0.0;
  for (std::size_t b = 0; b < preds.size(); ++b) {
    auto pf = naive_sum_pool(preds[b], fine);
    auto pc = naive_sum_pool(preds[b], coarse);
    auto gf = naive_sum_pool(gts[b], fine);
    auto gc = naive_sum_pool(gts[b], coarse);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const std::size_t ci = (r >> shift) * cs + (c >> shift);
        const double r_gt = gf[r * side + c] - scale * gc[ci];
        const double r_pred = pf[r * side + c] - scale * pc[ci];
        total += (r_gt - r_pred) * (r_gt - r_pred);
      }
    }
  }
  return total / static_cast<double>(preds.size());
}

struct RandomBatch {
  std::vector<DensityMap> preds;
  std::vector<DensityMap> gts;
};

/// Non-negative ground truth, predictions = ground truth + uniform noise.
inline RandomBatch random_batch(std::uint64_t seed, int level, std::size_t batch,
                                double noise = 1.0) {
  SplitMix64 rng(seed);
  RandomBatch out;
  for (std::size_t b = 0; b < batch; ++b) {
    DensityMap gt = random_uniform_map(rng, level, 0.0, 2.0);
    std::vector<double> p = to_vec(gt);
    for (double& v : p) v += rng.uniform(-noise, noise);
    out.preds.emplace_back(level, std::move(p));
    out.gts.push_back(std::move(gt));
  }
  return out;
}

inline double rel_diff(double a, double b) {
  const double denom = std::max(std::abs(a), std::abs(b));
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace pml::testing
