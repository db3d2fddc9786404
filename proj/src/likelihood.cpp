#include "pml/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "pml/errors.hpp"
#include "pml/io.hpp"
#include "pml/parallel.hpp"
#include "pml/pyramid.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Batch size used by the theorem trials.
constexpr std::size_t kTrialBatch = 4;

void check_set(const ResolutionSet& levels, int prediction_level) {
  if (levels.size() < 2) {
    throw InvalidArgument("resolution set " + levels.to_string() +
                          " needs at least one sub-level and the prediction level");
  }
  if (levels.prediction_level() != prediction_level) {
    throw InvalidArgument("resolution set " + levels.to_string() +
                          " must end at the prediction level " +
                          std::to_string(prediction_level));
  }
}

// Prediction error with structure at every scale: sum over levels of a
// replicated noise field with a log-normal amplitude, so per-level loss
// ratios vary from trial to trial.
DensityMap multiscale_error(SplitMix64& rng, int level) {
  std::vector<double> err(cell_count(level), 0.0);
  for (int i = 0; i <= level; ++i) {
    const double amp = std::exp(rng.normal());
    DensityMap noise = random_uniform_map(rng, i, -amp, amp);
    DensityMap up = upsample_replicate(noise, level);
    auto u = up.values();
    for (std::size_t c = 0; c < err.size(); ++c) err[c] += u[c];
  }
  return DensityMap(level, std::move(err));
}

}  // namespace

LevelStatistics level_statistics(MapBatch preds, MapBatch gts,
                                 const ResolutionSet& levels, double epsilon) {
  check_batches(preds, gts);
  check_set(levels, preds[0].level());
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  LevelStatistics s;
  s.levels = levels;
  s.epsilon = epsilon;
  auto sub = levels.sub_levels();
  s.l2_base = l2_level(preds, gts, sub[0]);
  for (std::size_t j = 1; j < sub.size(); ++j) {
    s.ldiff.push_back(l_diff_pair(preds, gts, sub[j - 1], sub[j]));
  }
  return s;
}

LikelihoodReport profile_log_likelihood(const LevelStatistics& stats) {
  auto sub = stats.levels.sub_levels();
  if (sub.empty() || stats.ldiff.size() + 1 != sub.size()) {
    throw InvalidArgument("profile_log_likelihood: statistics do not match the resolution set");
  }
  const double eps = stats.epsilon;
  LikelihoodReport r;
  r.resolution_set = stats.levels;
  r.constant_part = -((-1.0 + kTwoPi) / 2.0) * pow4(sub.back());
  r.base_term = -0.5 * pow4(sub[0]) * std::log(stats.l2_base + eps);
  double pair_sum = 0.0;
  for (std::size_t j = 1; j < sub.size(); ++j) {
    PairTerm t;
    t.coarse = sub[j - 1];
    t.fine = sub[j];
    t.ldiff = stats.ldiff[j - 1];
    t.weight = pow4(t.fine) - pow4(t.coarse);
    t.contribution = -0.5 * t.weight * std::log(pow4(t.fine) * (t.ldiff + eps) / t.weight);
    pair_sum += t.contribution;
    r.terms.push_back(t);
  }
  r.loglik = r.constant_part + pair_sum + r.base_term;
  return r;
}

LikelihoodReport log_likelihood(MapBatch preds, MapBatch gts,
                                const ResolutionSet& levels, double epsilon) {
  return profile_log_likelihood(level_statistics(preds, gts, levels, epsilon));
}

LikelihoodReport special_case_likelihood(MapBatch preds, MapBatch gts, int n,
                                         double epsilon) {
  check_batches(preds, gts);
  const int top = preds[0].level();
  if (n < 0 || n >= top) {
    throw InvalidArgument("special_case_likelihood: need 0 <= n < L, got n=" +
                          std::to_string(n) + " L=" + std::to_string(top));
  }
  LikelihoodReport r;
  r.resolution_set = ResolutionSet::dense(n, top);
  r.constant_part = -((-1.0 + kTwoPi) / 2.0) * pow4(n);
  r.base_term = -0.5 * std::log(l2_level(preds, gts, 0) + epsilon);
  double pair_sum = 0.0;
  for (int j = 1; j <= n; ++j) {
    PairTerm t;
    t.coarse = j - 1;
    t.fine = j;
    t.ldiff = l_diff(preds, gts, j);
    t.weight = pow4(j) - pow4(j - 1);
    t.contribution = -0.5 * t.weight * std::log(4.0 / 3.0 * (t.ldiff + epsilon));
    pair_sum += t.contribution;
    r.terms.push_back(t);
  }
  r.loglik = r.constant_part + pair_sum + r.base_term;
  return r;
}

double marginal_log_likelihood(const LevelStatistics& stats,
                               const std::map<int, double>& sigma_sq) {
  auto sub = stats.levels.sub_levels();
  auto sigma = [&](int j) {
    auto it = sigma_sq.find(j);
    if (it == sigma_sq.end() || !(it->second > 0.0)) {
      throw InvalidArgument("marginal_log_likelihood: sigma_" + std::to_string(j) +
                            "^2 missing or non-positive");
    }
    return it->second;
  };
  const double eps = stats.epsilon;
  double ll = 0.0;
  for (std::size_t j = 1; j < sub.size(); ++j) {
    const double s2 = sigma(static_cast<int>(j));
    const double weight = pow4(sub[j]) - pow4(sub[j - 1]);
    const double log4_term =
        static_cast<double>(sub[j] - sub[j - 1]) * pow4(sub[j - 1]) * std::log(4.0);
    ll -= 0.5 * ((stats.ldiff[j - 1] + eps) / s2 + weight * std::log(kTwoPi * s2) + log4_term);
  }
  const double s0 = sigma(0);
  ll -= 0.5 * ((stats.l2_base + eps) / s0 + pow4(sub[0]) * std::log(kTwoPi * s0));
  return ll;
}

TheoremReport verify_theorem(int trials, std::uint64_t seed, int prediction_level,
                             int nk, unsigned threads, double slack) {
  if (trials < 1) throw InvalidArgument("verify_theorem: trials must be >= 1");
  check_level(prediction_level, "verify_theorem");
  if (nk <= 0 || nk >= prediction_level) {
    throw InvalidArgument("verify_theorem: need 0 < nk < L, got nk=" +
                          std::to_string(nk) + " L=" + std::to_string(prediction_level));
  }
  TheoremReport report;
  report.prediction_level = prediction_level;
  report.nk = nk;
  report.seed = seed;
  report.slack = slack;
  report.trials.resize(static_cast<std::size_t>(trials));

  const ResolutionSet dense = ResolutionSet::dense(nk, prediction_level);
  parallel_for(report.trials.size(), threads, [&](std::size_t t) {
    SplitMix64 rng(derive_seed(seed, {t}));
    std::vector<DensityMap> preds;
    std::vector<DensityMap> gts;
    for (std::size_t b = 0; b < kTrialBatch; ++b) {
      DensityMap gt = random_uniform_map(rng, prediction_level, 0.0, 2.0);
      DensityMap err = multiscale_error(rng, prediction_level);
      std::vector<double> p(gt.size());
      for (std::size_t c = 0; c < p.size(); ++c) p[c] = gt.values()[c] + err.values()[c];
      preds.emplace_back(prediction_level, std::move(p));
      gts.push_back(std::move(gt));
    }
    std::vector<int> levels;
    for (int i = 0; i < nk; ++i) {
      if (rng.uniform01() < 0.5) levels.push_back(i);
    }
    levels.push_back(nk);
    levels.push_back(prediction_level);

    TheoremTrial& out = report.trials[t];
    out.trial = static_cast<int>(t);
    out.sparse = ResolutionSet(std::move(levels));
    out.loglik_sparse = log_likelihood(preds, gts, out.sparse).loglik;
    out.loglik_dense = log_likelihood(preds, gts, dense).loglik;
    out.diff = out.loglik_dense - out.loglik_sparse;
    out.violated = out.loglik_sparse - out.loglik_dense > slack;
  });
  for (const auto& t : report.trials) report.violations += t.violated ? 1 : 0;
  return report;
}

std::string theorem_csv(const TheoremReport& report) {
  std::ostringstream os;
  os << "trial,loglik_N,loglik_Nprime,diff,violated\n";
  for (const auto& t : report.trials) {
    os << t.trial << ',' << io::format_double(t.loglik_sparse) << ','
       << io::format_double(t.loglik_dense) << ',' << io::format_double(t.diff) << ','
       << (t.violated ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace pml
