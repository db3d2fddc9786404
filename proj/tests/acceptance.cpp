// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Reference values come from the naive oracles in
// test_util.hpp or are recomputed here from the definitions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "pml/eval.hpp"
#include "pml/likelihood.hpp"
#include "pml/loss.hpp"
#include "pml/pyramid.hpp"
#include "pml/rng.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace pml;
using namespace pml::testing;

namespace {

// Tolerances and budgets.
constexpr double kLdiffRelTol = 1e-10;
constexpr double kGradRelTol = 1e-5;
constexpr double kTheoremSlack = 1e-9;
constexpr double kAlphaTol = 1e-12;
constexpr double kReweightTol = 1e-10;
constexpr double kSpecialRelTol = 1e-10;
constexpr double kConservationRelTol = 1e-12;
constexpr double kResidualAbsTol = 1e-10;
constexpr double kBudget1 = 10, kBudget2 = 60, kBudget3 = 30, kBudget8 = 600;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------
Outcome ldiff_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int compared = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    SplitMix64 pick(derive_seed(0xa1, {s}));
    const int level = static_cast<int>(pick.uniform_int(1, 6));
    const auto batch = static_cast<std::size_t>(pick.uniform_int(1, 4));
    auto rb = random_batch(derive_seed(0xa2, {s}), level, batch, pick.uniform(0.01, 2.0));
    for (int j = 1; j <= level; ++j) {
      const double residual_form = l_diff(rb.preds, rb.gts, j);
      const double subtraction_form =
          l_diff_from_l2(l2_level(rb.preds, rb.gts, j), l2_level(rb.preds, rb.gts, j - 1), j - 1, j);
      const double oracle = naive_residual_ldiff(rb.preds, rb.gts, j - 1, j);
      worst = std::max({worst, rel_diff(residual_form, subtraction_form), rel_diff(residual_form, oracle)});
      ++compared;
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kLdiffRelTol && t < kBudget1,
          "1000 batches, " + std::to_string(compared) + " pairs, max rel diff " + fmt("%.3g", worst) +
              " (tol 1e-10), " + fmt("%.2f", t) + " s (budget 10 s)"};
}

// ---- 2 ---------------------------------------------------------------------
Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<int, int>> shapes;  // (L, n) with n <= L
  for (int L = 3; L <= 5; ++L)
    for (int n = 0; n <= std::min(4, L); ++n) shapes.emplace_back(L, n);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto [level, n] = shapes[i % shapes.size()];
    auto rb = random_batch(derive_seed(0xb1, {i}), level, 2);
    const auto analytic = loss_gradient(rb.preds, rb.gts, n);
    double max_err = 0.0, scale = 0.0;
    for (std::size_t b = 0; b < rb.preds.size(); ++b) {
      std::vector<DensityMap> work = rb.preds;
      auto v = to_vec(work[b]);
      for (std::size_t k = 0; k < v.size(); ++k) {
        const double x = v[k];
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        auto f = [&](double value) {
          v[k] = value;
          work[b] = DensityMap(level, v);
          return total_loss(work, rb.gts, n).total;
        };
        const double numeric = (f(x + h) - f(x - h)) / (2 * h);
        v[k] = x;
        max_err = std::max(max_err, std::abs(numeric - analytic[b].values()[k]));
        scale = std::max(scale, std::abs(numeric));
      }
    }
    worst = std::max(worst, max_err / scale);
  }
  const double t = seconds_since(t0);
  return {worst < kGradRelTol && t < kBudget2,
          "50 instances (L 3..5, n 0..4), max error / max |gradient| " + fmt("%.3g", worst) +
              " (tol 1e-5), " + fmt("%.2f", t) + " s (budget 60 s)"};
}

// ---- 3 ---------------------------------------------------------------------
double oracle_loglik(const RandomBatch& rb, const std::vector<int>& sub) {
  const double eps = kDefaultEpsilon;
  double ll = -((-1.0 + 2.0 * std::numbers::pi) / 2.0) * std::pow(4.0, sub.back());
  for (std::size_t j = 1; j < sub.size(); ++j) {
    const double w = std::pow(4.0, sub[j]) - std::pow(4.0, sub[j - 1]);
    const double d = naive_residual_ldiff(rb.preds, rb.gts, sub[j - 1], sub[j]);
    ll -= 0.5 * w * std::log(std::pow(4.0, sub[j]) * (d + eps) / w);
  }
  return ll - 0.5 * std::pow(4.0, sub.front()) * std::log(naive_l2(rb.preds, rb.gts, sub.front()) + eps);
}

Outcome theorem() {
  const auto t0 = std::chrono::steady_clock::now();
  // Library sweep: 1000 trials spread over several (L, nk) shapes.
  struct Shape { int L, nk, trials; };
  int violations = 0, trials = 0;
  double min_diff = INFINITY;
  for (const Shape& sh : {Shape{3, 1, 150}, Shape{4, 2, 250}, Shape{5, 3, 350}, Shape{6, 4, 250}}) {
    auto r = verify_theorem(sh.trials, derive_seed(0xc1, {static_cast<std::uint64_t>(sh.L)}), sh.L,
                            sh.nk, 1, kTheoremSlack);
    violations += r.violations;
    trials += static_cast<int>(r.trials.size());
    for (const auto& t : r.trials) min_diff = std::min(min_diff, t.diff);
  }
  // Independent spot check with the from-scratch evaluator.
  int oracle_violations = 0;
  SplitMix64 rng(0xc2);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const int L = static_cast<int>(rng.uniform_int(2, 5));
    const int nk = static_cast<int>(rng.uniform_int(1, L - 1));
    auto rb = random_batch(derive_seed(0xc3, {i}), L, 2, std::exp(rng.uniform(-3, 1)));
    std::vector<int> sparse, dense;
    for (int l = 0; l < nk; ++l) {
      dense.push_back(l);
      if (rng.uniform01() < 0.5) sparse.push_back(l);
    }
    sparse.push_back(nk);
    dense.push_back(nk);
    if (oracle_loglik(rb, dense) < oracle_loglik(rb, sparse) - kTheoremSlack) ++oracle_violations;
  }
  const double t = seconds_since(t0);
  return {violations == 0 && oracle_violations == 0 && t < kBudget3,
          std::to_string(trials) + " trials, " + std::to_string(violations) +
              " violations beyond 1e-9 (min dense-sparse " + fmt("%.3g", min_diff) + "), oracle spot check " +
              std::to_string(oracle_violations) + "/100, " + fmt("%.2f", t) + " s (budget 30 s)"};
}

// ---- 4 ---------------------------------------------------------------------
// Marginal likelihood at explicit variances, written out from the definition.
double oracle_marginal(const RandomBatch& rb, const std::vector<int>& sub, const std::vector<double>& s2) {
  const double eps = kDefaultEpsilon;
  const double two_pi = 2.0 * std::numbers::pi;
  double ll = 0.0;
  for (std::size_t j = 1; j < sub.size(); ++j) {
    const double d = naive_residual_ldiff(rb.preds, rb.gts, sub[j - 1], sub[j]) + eps;
    ll -= 0.5 * (d / s2[j] + (std::pow(4.0, sub[j]) - std::pow(4.0, sub[j - 1])) * std::log(two_pi * s2[j]) +
                 (sub[j] - sub[j - 1]) * std::pow(4.0, sub[j - 1]) * std::log(4.0));
  }
  const double base = naive_l2(rb.preds, rb.gts, sub[0]) + eps;
  return ll - 0.5 * (base / s2[0] + std::pow(4.0, sub[0]) * std::log(two_pi * s2[0]));
}

Outcome sigma_stationarity() {
  int increases = 0, evaluations = 0;
  double lib_mismatch = 0.0;
  SplitMix64 rng(0xd1);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const int L = static_cast<int>(rng.uniform_int(2, 6));
    auto rb = random_batch(derive_seed(0xd2, {i}), L, 3, std::exp(rng.uniform(-3, 1)));
    std::vector<int> levels;
    for (int l = 0; l < L; ++l)
      if (rng.uniform01() < 0.6) levels.push_back(l);
    if (levels.empty()) levels.push_back(static_cast<int>(rng.uniform_int(0, L - 1)));
    const std::vector<int> sub = levels;
    levels.push_back(L);
    const ResolutionSet set(levels);

    const auto sigma = optimal_sigma(total_loss(rb.preds, rb.gts, 0), set);
    std::vector<double> s2;
    for (std::size_t j = 0; j < sub.size(); ++j) s2.push_back(sigma.sigma_sq.at(static_cast<int>(j)));
    const double best = oracle_marginal(rb, sub, s2);
    lib_mismatch = std::max(lib_mismatch,
                            rel_diff(best, marginal_log_likelihood(level_statistics(rb.preds, rb.gts, set),
                                                                   sigma.sigma_sq)));
    for (std::size_t j = 0; j < s2.size(); ++j) {
      for (double f : {0.9, 0.99, 1.01, 1.1}) {
        auto moved = s2;
        moved[j] *= f;
        ++evaluations;
        if (oracle_marginal(rb, sub, moved) > best + 1e-12 * std::abs(best)) ++increases;
      }
    }
  }
  return {increases == 0 && lib_mismatch <= 1e-10,
          "100 instances, " + std::to_string(evaluations) + " perturbations (+-1%, +-10%), " +
              std::to_string(increases) + " increases; library vs oracle likelihood rel diff " +
              fmt("%.3g", lib_mismatch)};
}

// ---- 5 ---------------------------------------------------------------------
Outcome alpha_system() {
  double worst_constraint = 0.0, worst_alpha0 = 0.0, worst_reweight = 0.0;
  for (int n = 1; n <= 8; ++n) {
    const auto a = alpha_coefficients(n).alpha;
    double total = 0.0;
    for (double v : a) total += v;
    worst_constraint = std::max(worst_constraint, std::abs(total - 1.0));
    for (int j = 1; j <= n; ++j) {
      double tail = 0.0;
      for (int k = j; k <= n; ++k) tail += a[static_cast<std::size_t>(k)];
      worst_constraint =
          std::max(worst_constraint, std::abs((std::pow(4.0, j) - std::pow(4.0, j - 1)) * tail - 1.0));
    }
  }
  for (int n = 1; n <= 30; ++n) worst_alpha0 = std::max(worst_alpha0, std::abs(alpha_coefficients(n).alpha[0] - 2.0 / 3.0));

  SplitMix64 rng(0xe1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 8));
    const auto a = alpha_coefficients(n).alpha;
    const double l2 = std::exp(rng.uniform(-8, 8));
    std::vector<double> d(static_cast<std::size_t>(n) + 1);
    for (int j = 1; j <= n; ++j) d[static_cast<std::size_t>(j)] = std::exp(rng.uniform(-8, 8));
    double lhs = 0.0;
    for (int k = 0; k <= n; ++k) {
      double inner = std::log(l2);
      for (int j = 1; j <= k; ++j)
        inner += (std::pow(4.0, j) - std::pow(4.0, j - 1)) * std::log(d[static_cast<std::size_t>(j)]);
      lhs += a[static_cast<std::size_t>(k)] * inner;
    }
    double rhs = std::log(l2);
    for (int j = 1; j <= n; ++j) rhs += std::log(d[static_cast<std::size_t>(j)]);
    worst_reweight = std::max(worst_reweight, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return {worst_constraint <= kAlphaTol && worst_alpha0 <= kAlphaTol && worst_reweight <= kReweightTol,
          "constraint residual " + fmt("%.3g", worst_constraint) + " (n 1..8, tol 1e-12), |alpha_0 - 2/3| " +
              fmt("%.3g", worst_alpha0) + " (n 1..30), re-weighting error " + fmt("%.3g", worst_reweight) +
              " (tol 1e-10)"};
}

// ---- 6 ---------------------------------------------------------------------
Outcome specialization() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rb = random_batch(derive_seed(0xf1, {s}), 6, 2, 0.2 + 0.05 * static_cast<double>(s));
    for (int n = 0; n <= 5; ++n) {
      const double special = special_case_likelihood(rb.preds, rb.gts, n).loglik;
      const double general = log_likelihood(rb.preds, rb.gts, ResolutionSet::dense(n, 6)).loglik;
      // Dense-set closed form, recomputed from the oracles.
      double oracle = -((-1.0 + 2.0 * std::numbers::pi) / 2.0) * std::pow(4.0, n) -
                      0.5 * std::log(naive_l2(rb.preds, rb.gts, 0) + kDefaultEpsilon);
      for (int j = 1; j <= n; ++j) {
        oracle -= 0.5 * (std::pow(4.0, j) - std::pow(4.0, j - 1)) *
                  std::log(4.0 / 3.0 * (naive_residual_ldiff(rb.preds, rb.gts, j - 1, j) + kDefaultEpsilon));
      }
      worst = std::max({worst, rel_diff(special, general), rel_diff(special, oracle)});
    }
  }
  return {worst <= kSpecialRelTol,
          "50 batches x n 0..5 on {0..n, 6}, max rel diff " + fmt("%.3g", worst) + " (tol 1e-10)"};
}

// ---- 7 ---------------------------------------------------------------------
Outcome conservation() {
  double worst_sum = 0.0, worst_resid = 0.0;
  SplitMix64 rng(0x71);
  for (int trial = 0; trial < 1000; ++trial) {
    const int L = static_cast<int>(rng.uniform_int(1, 7));
    const DensityMap m = random_uniform_map(rng, L, 0.0, 1.0);
    double total = 0.0;
    for (double v : m.values()) total += v;
    for (int l = 0; l <= L; ++l) {
      const DensityMap d = downsample_sum(m, l);
      double s = 0.0;
      for (double v : d.values()) s += v;
      worst_sum = std::max(worst_sum, rel_diff(s, total));
    }
    const int coarse = static_cast<int>(rng.uniform_int(0, L - 1));
    const int fine = static_cast<int>(rng.uniform_int(coarse + 1, L));
    const ResidualMap r = residual(downsample_sum(m, fine), downsample_sum(m, coarse));
    // Block averages of the residual, taken directly.
    const std::size_t side = std::size_t{1} << fine;
    const int shift = fine - coarse;
    std::vector<double> block(cell_count(coarse), 0.0);
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x)
        block[(y >> shift) * (std::size_t{1} << coarse) + (x >> shift)] += r.data[y * side + x];
    for (double b : block) worst_resid = std::max(worst_resid, std::abs(b) / std::pow(4.0, shift));
  }
  return {worst_sum <= kConservationRelTol && worst_resid <= kResidualAbsTol,
          "1000 maps, count drift " + fmt("%.3g", worst_sum) + " rel (tol 1e-12), residual block mean " +
              fmt("%.3g", worst_resid) + " abs (tol 1e-10)"};
}

// ---- 8 ---------------------------------------------------------------------
Outcome training_benefit() {
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkConfig base = default_benchmark();
  const auto tests = test_scenes(base);

  double pml_mean = 0.0, l2_mean = 0.0;
  std::string per_seed;
  const int seeds = 3;
  for (int s = 0; s < seeds; ++s) {
    BenchmarkConfig cfg = base;
    cfg.train.seed = static_cast<std::uint64_t>(s);
    cfg.train.loss = LossKind::pml;
    const double pml = run_benchmark(cfg, tests).test.mae;
    cfg.train.loss = LossKind::l2;
    const double l2 = run_benchmark(cfg, tests).test.mae;
    pml_mean += pml / seeds;
    l2_mean += l2 / seeds;
    per_seed += " s" + std::to_string(s) + "=" + fmt("%.2f", pml) + "/" + fmt("%.2f", l2);
  }

  const auto sweep = ablation_run(0, {0, 1, 2, 3, 4, 5}, {true, false}, 1, base);
  double reg_on = 0.0, reg_off = 0.0;
  for (const auto& c : sweep.cells) (c.with_regularizer ? reg_on : reg_off) += c.mean_mae / 6.0;
  const double t = seconds_since(t0);

  std::printf("    per-seed test MAE pml+reg/l2:%s\n", per_seed.c_str());
  for (const auto& c : sweep.cells)
    std::printf("    sweep %-12s test MAE %.3f\n", cell_key(c.n, c.with_regularizer).c_str(), c.mean_mae);

  return {pml_mean <= l2_mean && reg_on <= reg_off && t < kBudget8,
          "mean test MAE pml+reg " + fmt("%.3f", pml_mean) + " vs l2 " + fmt("%.3f", l2_mean) +
              " (3 seeds); sweep n 0..5 mean reg on " + fmt("%.3f", reg_on) + " vs off " + fmt("%.3f", reg_off) +
              "; " + fmt("%.1f", t) + " s (budget 600 s)"};
}

// ---- 9 ---------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome determinism(const std::string& pml_binary) {
  const fs::path dir = fs::temp_directory_path() / "pml_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto sh = [&](const std::string& args) {
    const std::string cmd = "\"" + pml_binary + "\" " + args + " > /dev/null";
    return std::system(cmd.c_str());
  };
  bool ran = true;
  for (const char* tag : {"a", "b"}) {
    const std::string threads = tag[0] == 'a' ? "1" : "2";
    ran &= sh("train-demo --seed 11 --steps 250 --loss pml --test-scenes 10 --out " +
              (dir / (std::string(tag) + "_train.csv")).string()) == 0;
    ran &= sh("--threads " + threads + " verify-theorem --trials 300 --seed 42 --level 5 --nk 3 --out " +
              (dir / (std::string(tag) + "_theorem.csv")).string()) == 0;
  }
  const std::string ta = slurp(dir / "a_train.csv"), tb = slurp(dir / "b_train.csv");
  const std::string va = slurp(dir / "a_theorem.csv"), vb = slurp(dir / "b_theorem.csv");
  fs::remove_all(dir);
  const bool same = !ta.empty() && !va.empty() && ta == tb && va == vb;
  return {ran && same, std::string("train-demo CSV ") + (ta == tb ? "identical" : "DIFFERS") + " (" +
                           std::to_string(ta.size()) + " bytes), verify-theorem CSV " +
                           (va == vb ? "identical" : "DIFFERS") + " across thread counts (" +
                           std::to_string(va.size()) + " bytes)" + (ran ? "" : "; a run failed")};
}

}  // namespace

// Usage: acceptance [pml-binary] [criterion numbers to run; default all]
int main(int argc, char** argv) {
  const std::string pml_binary = argc > 1 ? argv[1] : "pml";
  std::vector<std::size_t> only;
  for (int i = 2; i < argc; ++i) only.push_back(std::stoul(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ldiff subtraction form equals residual form", ldiff_identity},
      {"analytic gradient matches finite differences", gradient_check},
      {"dense resolution sets never lose likelihood", theorem},
      {"closed-form variances maximize the likelihood", sigma_stationarity},
      {"alpha re-weighting system", alpha_system},
      {"dense-set likelihood specialization", specialization},
      {"pyramid conservation and residual prior", conservation},
      {"training benefit on the synthetic benchmark", training_benefit},
      {"CSV determinism of train-demo and verify-theorem", [&] { return determinism(pml_binary); }},
  };
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), i + 1) == only.end()) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu: %s  %s — %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
