#include "pml/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "pml/errors.hpp"
#include "pml/io.hpp"

namespace pml {

namespace {

// Difference pyramid of one (pred, gt) pair: diffs[i] = S_i(pred - gt) for
// i = 0..L, stored row-major at side 2^i.
using DiffPyramid = std::vector<std::vector<double>>;

DiffPyramid diff_pyramid(const DensityMap& pred, const DensityMap& gt) {
  const int top = pred.level();
  DiffPyramid p(static_cast<std::size_t>(top) + 1);
  auto& fine = p[static_cast<std::size_t>(top)];
  fine.resize(pred.size());
  auto a = pred.values();
  auto b = gt.values();
  for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = a[i] - b[i];
  for (int lvl = top - 1; lvl >= 0; --lvl) {
    const auto& src = p[static_cast<std::size_t>(lvl) + 1];
    auto& dst = p[static_cast<std::size_t>(lvl)];
    const std::size_t side = std::size_t{1} << lvl;
    const std::size_t src_side = side * 2;
    dst.assign(side * side, 0.0);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const std::size_t s = 2 * r * src_side + 2 * c;
        dst[r * side + c] = (src[s] + src[s + 1]) + (src[s + src_side] + src[s + src_side + 1]);
      }
    }
  }
  return p;
}

double squared_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

// ||d_fine - 4^(coarse-fine) U(d_coarse)||^2 without materializing U.
double residual_norm(const DiffPyramid& p, int coarse, int fine) {
  const auto& f = p[static_cast<std::size_t>(fine)];
  const auto& c = p[static_cast<std::size_t>(coarse)];
  const std::size_t side = std::size_t{1} << fine;
  const int shift = fine - coarse;
  const std::size_t coarse_side = std::size_t{1} << coarse;
  const double scale = pow4(coarse - fine);
  double acc = 0.0;
  for (std::size_t r = 0; r < side; ++r) {
    const double* coarse_row = c.data() + (r >> shift) * coarse_side;
    const double* fine_row = f.data() + r * side;
    for (std::size_t col = 0; col < side; ++col) {
      const double d = fine_row[col] - scale * coarse_row[col >> shift];
      acc += d * d;
    }
  }
  return acc;
}

std::vector<DiffPyramid> diff_pyramids(MapBatch preds, MapBatch gts) {
  check_batches(preds, gts);
  std::vector<DiffPyramid> out;
  out.reserve(preds.size());
  for (std::size_t b = 0; b < preds.size(); ++b) out.push_back(diff_pyramid(preds[b], gts[b]));
  return out;
}

double mean_l2(const std::vector<DiffPyramid>& ps, int level) {
  double acc = 0.0;
  for (const auto& p : ps) acc += squared_norm(p[static_cast<std::size_t>(level)]);
  return acc / static_cast<double>(ps.size());
}

double mean_ldiff(const std::vector<DiffPyramid>& ps, int coarse, int fine) {
  double acc = 0.0;
  for (const auto& p : ps) acc += residual_norm(p, coarse, fine);
  return acc / static_cast<double>(ps.size());
}

void check_n(int n, int prediction_level, double epsilon) {
  if (n < 0) throw InvalidArgument("n must be >= 0, got " + std::to_string(n));
  if (n > prediction_level) {
    throw InvalidArgument("n = " + std::to_string(n) +
                          " exceeds the prediction level " +
                          std::to_string(prediction_level));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive and finite");
  }
}

LossBreakdown breakdown_from(const std::vector<DiffPyramid>& ps, int top, int n,
                             double epsilon) {
  LossBreakdown b;
  b.prediction_level = top;
  b.n = n;
  b.epsilon = epsilon;
  for (int i = 0; i <= top; ++i) b.l2_per_level[i] = mean_l2(ps, i);
  b.pml = std::log(b.l2_per_level[0] + epsilon);
  for (int j = 1; j <= n; ++j) {
    const double d = mean_ldiff(ps, j - 1, j);
    b.ldiff_per_pair[{j - 1, j}] = d;
    b.pml += std::log(d + epsilon);
  }
  b.total = b.pml;
  return b;
}

SigmaEstimate sigma_for_sublevels(const LossBreakdown& b, std::span<const int> sub) {
  auto l2_at = [&](int level) {
    auto it = b.l2_per_level.find(level);
    if (it == b.l2_per_level.end()) {
      throw InvalidArgument("optimal_sigma: L2 at level " + std::to_string(level) +
                            " is missing from the breakdown");
    }
    return it->second;
  };
  auto ldiff_at = [&](int coarse, int fine) {
    auto it = b.ldiff_per_pair.find({coarse, fine});
    if (it != b.ldiff_per_pair.end()) return it->second;
    return l_diff_from_l2(l2_at(fine), l2_at(coarse), coarse, fine);
  };

  SigmaEstimate est;
  auto guarded = [&](double value, double denom, int j) {
    if (b.epsilon > 0.0) {
      if (value < b.epsilon) est.degenerate = true;
      return (value + b.epsilon) / denom;
    }
    if (!(value > 0.0)) {
      throw DegenerateVarianceError("sigma_" + std::to_string(j) +
                                    "^2 is zero and no epsilon guard is set");
    }
    return value / denom;
  };

  est.sigma_sq[0] = guarded(l2_at(sub[0]), pow4(sub[0]), 0);
  for (std::size_t j = 1; j < sub.size(); ++j) {
    const double denom = pow4(sub[j]) - pow4(sub[j - 1]);
    est.sigma_sq[static_cast<int>(j)] =
        guarded(ldiff_at(sub[j - 1], sub[j]), denom, static_cast<int>(j));
  }
  return est;
}

// Sum over i of coeff[i] * U_{top<-i}(diff[i]), accumulated coarse to fine.
std::vector<double> upsampled_combination(const DiffPyramid& p,
                                          const std::vector<double>& coeff) {
  std::vector<double> acc(1, coeff[0] * p[0][0]);
  for (std::size_t lvl = 1; lvl < p.size(); ++lvl) {
    const std::size_t side = std::size_t{1} << lvl;
    const std::size_t half = side / 2;
    std::vector<double> next(side * side);
    const auto& d = p[lvl];
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        next[r * side + c] = acc[(r / 2) * half + c / 2] + coeff[lvl] * d[r * side + c];
      }
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

void check_batches(MapBatch preds, MapBatch gts) {
  if (preds.empty()) throw InvalidArgument("empty batch");
  if (preds.size() != gts.size()) {
    throw InvalidArgument("batch size mismatch: " + std::to_string(preds.size()) +
                          " predictions vs " + std::to_string(gts.size()) +
                          " ground truths");
  }
  for (std::size_t b = 0; b < preds.size(); ++b) {
    if (preds[b].level() != gts[b].level()) {
      throw InvalidArgument("level mismatch at batch index " + std::to_string(b));
    }
    if (preds[b].level() != preds[0].level()) {
      throw InvalidArgument("batch items must share a level (index " +
                            std::to_string(b) + ")");
    }
  }
}

double l2_level(MapBatch preds, MapBatch gts, int level) {
  check_batches(preds, gts);
  if (level < 0 || level > preds[0].level()) {
    throw InvalidArgument("l2_level: level " + std::to_string(level) +
                          " outside [0, " + std::to_string(preds[0].level()) + "]");
  }
  return mean_l2(diff_pyramids(preds, gts), level);
}

double l_diff_pair(MapBatch preds, MapBatch gts, int coarse, int fine) {
  check_batches(preds, gts);
  if (coarse < 0 || coarse >= fine || fine > preds[0].level()) {
    throw InvalidArgument("l_diff: need 0 <= coarse < fine <= " +
                          std::to_string(preds[0].level()));
  }
  return mean_ldiff(diff_pyramids(preds, gts), coarse, fine);
}

double l_diff(MapBatch preds, MapBatch gts, int j) {
  if (j < 1) throw InvalidArgument("l_diff: j must be >= 1 (level 0 has no coarser level)");
  return l_diff_pair(preds, gts, j - 1, j);
}

double l_diff_from_l2(double l2_fine, double l2_coarse, int coarse, int fine) {
  return l2_fine - pow4(coarse - fine) * l2_coarse;
}

AlphaCoefficients alpha_coefficients(int n) {
  if (n < 1) throw InvalidArgument("alpha_coefficients: n must be >= 1");
  // tail[j] = sum_{k>=j} alpha_k = 1 / (4^j - 4^(j-1)) for j >= 1, tail[0] = 1.
  std::vector<double> tail(static_cast<std::size_t>(n) + 2, 0.0);
  tail[0] = 1.0;
  for (int j = 1; j <= n; ++j) tail[static_cast<std::size_t>(j)] = 1.0 / (pow4(j) - pow4(j - 1));
  AlphaCoefficients a{n, std::vector<double>(static_cast<std::size_t>(n) + 1)};
  for (int k = 0; k <= n; ++k) {
    a.alpha[static_cast<std::size_t>(k)] =
        tail[static_cast<std::size_t>(k)] - tail[static_cast<std::size_t>(k) + 1];
  }
  return a;
}

double reweighted_log_terms(const AlphaCoefficients& a, double l2_base,
                            std::span<const double> ldiff) {
  if (ldiff.size() != static_cast<std::size_t>(a.n)) {
    throw InvalidArgument("reweighted_log_terms: need n difference terms");
  }
  double total = 0.0;
  for (int k = 0; k <= a.n; ++k) {
    double inner = std::log(l2_base);
    for (int j = 1; j <= k; ++j) {
      inner += (pow4(j) - pow4(j - 1)) * std::log(ldiff[static_cast<std::size_t>(j) - 1]);
    }
    total += a.alpha[static_cast<std::size_t>(k)] * inner;
  }
  return total;
}

LossBreakdown pml_loss(MapBatch preds, MapBatch gts, int n, double epsilon) {
  check_batches(preds, gts);
  const int top = preds[0].level();
  check_n(n, top, epsilon);
  return breakdown_from(diff_pyramids(preds, gts), top, n, epsilon);
}

LossBreakdown total_loss(MapBatch preds, MapBatch gts, int n, double epsilon,
                         bool with_regularizer) {
  LossBreakdown b = pml_loss(preds, gts, n, epsilon);
  b.regularizer = with_regularizer ? b.l2_per_level.at(b.prediction_level) : 0.0;
  b.total = b.pml + b.regularizer;
  std::vector<int> sub;
  for (int i = 0; i <= n; ++i) sub.push_back(i);
  SigmaEstimate s = sigma_for_sublevels(b, sub);
  b.sigma_sq = std::move(s.sigma_sq);
  b.sigma_degenerate = s.degenerate;
  return b;
}

std::vector<DensityMap> loss_gradient(MapBatch preds, MapBatch gts, int n,
                                      double epsilon, bool with_regularizer) {
  check_batches(preds, gts);
  const int top = preds[0].level();
  check_n(n, top, epsilon);
  const auto ps = diff_pyramids(preds, gts);
  const LossBreakdown b = breakdown_from(ps, top, n, epsilon);

  // d log(x + eps) = dx / (x + eps); dL2^i/d pred = (2/B) U(d_i) and
  // dLdiff^{j-1,j} = dL2^j - dL2^(j-1) / 4. Collect per-level coefficients.
  std::vector<double> coeff(static_cast<std::size_t>(top) + 1, 0.0);
  coeff[0] += 1.0 / (b.l2_per_level.at(0) + epsilon);
  for (int j = 1; j <= n; ++j) {
    const double w = 1.0 / (b.ldiff_per_pair.at({j - 1, j}) + epsilon);
    coeff[static_cast<std::size_t>(j)] += w;
    coeff[static_cast<std::size_t>(j) - 1] -= 0.25 * w;
  }
  if (with_regularizer) coeff[static_cast<std::size_t>(top)] += 1.0;

  const double scale = 2.0 / static_cast<double>(preds.size());
  std::vector<DensityMap> grads;
  grads.reserve(preds.size());
  for (const auto& p : ps) {
    auto g = upsampled_combination(p, coeff);
    for (double& v : g) v *= scale;
    grads.emplace_back(top, std::move(g));
  }
  return grads;
}

std::vector<DensityMap> l2_gradient(MapBatch preds, MapBatch gts) {
  check_batches(preds, gts);
  const double scale = 2.0 / static_cast<double>(preds.size());
  std::vector<DensityMap> grads;
  grads.reserve(preds.size());
  for (std::size_t b = 0; b < preds.size(); ++b) {
    auto p = preds[b].values();
    auto g = gts[b].values();
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = scale * (p[i] - g[i]);
    grads.emplace_back(preds[b].level(), std::move(out));
  }
  return grads;
}

SigmaEstimate optimal_sigma(const LossBreakdown& breakdown, const ResolutionSet& levels) {
  if (levels.size() < 2) {
    throw InvalidArgument("optimal_sigma: resolution set needs a sub-level and L");
  }
  return sigma_for_sublevels(breakdown, levels.sub_levels());
}

GradientCheck check_gradient(MapBatch preds, MapBatch gts, int n, double epsilon,
                             bool with_regularizer) {
  const auto analytic = loss_gradient(preds, gts, n, epsilon, with_regularizer);
  std::vector<DensityMap> work(preds.begin(), preds.end());
  GradientCheck out;
  for (std::size_t b = 0; b < work.size(); ++b) {
    std::vector<double> v(work[b].values().begin(), work[b].values().end());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = v[i];
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      auto at = [&](double value) {
        v[i] = value;
        work[b] = DensityMap(work[b].level(), v);
        return total_loss(work, gts, n, epsilon, with_regularizer).total;
      };
      const double numeric = (at(x + h) - at(x - h)) / (2 * h);
      v[i] = x;
      out.max_abs_error = std::max(out.max_abs_error, std::abs(numeric - analytic[b].values()[i]));
      out.gradient_scale = std::max(out.gradient_scale, std::abs(numeric));
      ++out.entries;
    }
    work[b] = DensityMap(work[b].level(), std::move(v));
  }
  out.relative_error = out.gradient_scale > 0.0 ? out.max_abs_error / out.gradient_scale
                                                 : out.max_abs_error;
  return out;
}

std::vector<std::pair<std::string, double>> flat_entries(const LossBreakdown& b) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [level, v] : b.l2_per_level) out.emplace_back("l2." + std::to_string(level), v);
  for (const auto& [pair, v] : b.ldiff_per_pair) {
    out.emplace_back("ldiff." + std::to_string(pair.first) + "-" + std::to_string(pair.second), v);
  }
  for (const auto& [j, v] : b.sigma_sq) out.emplace_back("sigma_sq." + std::to_string(j), v);
  out.emplace_back("pml", b.pml);
  out.emplace_back("regularizer", b.regularizer);
  out.emplace_back("total", b.total);
  out.emplace_back("epsilon", b.epsilon);
  out.emplace_back("sigma_degenerate", b.sigma_degenerate ? 1.0 : 0.0);
  return out;
}

std::string to_text(const LossBreakdown& b) {
  std::ostringstream os;
  for (const auto& [key, v] : flat_entries(b)) os << key << ": " << io::format_double(v) << '\n';
  return os.str();
}

std::string to_json(const LossBreakdown& b) {
  nlohmann::ordered_json j;
  for (const auto& [key, v] : flat_entries(b)) j[key] = v;
  j["sigma_degenerate"] = b.sigma_degenerate;
  return j.dump(2);
}

}  // namespace pml
