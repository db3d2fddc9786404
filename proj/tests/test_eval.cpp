#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pml/errors.hpp"
#include "pml/eval.hpp"
#include "test_util.hpp"

using namespace pml;
using namespace pml::testing;

namespace {

DensityMap constant_map(int level, double total) {
  return DensityMap::filled(level, total / static_cast<double>(cell_count(level)));
}

BenchmarkConfig tiny_benchmark() {
  BenchmarkConfig cfg = default_benchmark();
  cfg.train.steps = 12;
  cfg.train.steps_per_epoch = 6;
  cfg.train.batch = 2;
  cfg.train.val_scenes = 3;
  cfg.train.n = 2;
  cfg.train.scenes.scene_size = 16.0;
  cfg.train.scenes.cluster_spread = 2.0;
  cfg.train.scenes.points_max = 8;
  cfg.train.scenes.obs_level = 4;
  cfg.train.scenes.gt_level = 4;
  cfg.arch = {2, 4};
  cfg.test_scenes = 5;
  return cfg;
}

}  // namespace

TEST_CASE("evaluate") {
  std::vector<DensityMap> preds{constant_map(2, 10), constant_map(2, 12)};
  std::vector<DensityMap> gts{constant_map(2, 11), constant_map(2, 11)};
  auto m = evaluate(preds, gts);
  CHECK(m.mae == doctest::Approx(1.0));
  CHECK(m.mse == doctest::Approx(1.0));
  REQUIRE(m.per_sample.size() == 2);
  CHECK(m.per_sample[0].first == doctest::Approx(10.0));
  CHECK(m.per_sample[0].second == doctest::Approx(11.0));

  std::vector<DensityMap> uneven{constant_map(2, 11), constant_map(2, 15)};
  auto u = evaluate(uneven, gts);
  CHECK(u.mae == doctest::Approx(2.0));
  CHECK(u.mse == doctest::Approx(std::sqrt(8.0)));

  CHECK(evaluate(gts, gts).mae == 0.0);
  std::vector<DensityMap> empty;
  CHECK_THROWS_AS(evaluate(empty, empty), InvalidArgument);
  CHECK_THROWS_AS(evaluate(std::span(preds).first(1), gts), InvalidArgument);
}

TEST_CASE("property: MAE <= MSE and both ignore sample order") {
  SplitMix64 rng(70);
  for (int trial = 0; trial < 100; ++trial) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 12));
    std::vector<DensityMap> p;
    std::vector<DensityMap> g;
    for (std::size_t i = 0; i < k; ++i) {
      p.push_back(random_uniform_map(rng, 2, 0.0, 3.0));
      g.push_back(random_uniform_map(rng, 2, 0.0, 3.0));
    }
    auto m = evaluate(p, g);
    CHECK(m.mae <= m.mse + 1e-12);
    CHECK(m.mae >= 0.0);
    std::reverse(p.begin(), p.end());
    std::reverse(g.begin(), g.end());
    auto r = evaluate(p, g);
    CHECK(r.mae == doctest::Approx(m.mae).epsilon(1e-12));
    CHECK(r.mse == doctest::Approx(m.mse).epsilon(1e-12));
  }
}

TEST_CASE("test scenes and benchmark runs are reproducible") {
  auto cfg = tiny_benchmark();
  auto a = test_scenes(cfg);
  auto b = test_scenes(cfg);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(fingerprint(a[i]) == fingerprint(b[i]));
  // Test scenes are drawn from a stream separate from training and validation.
  std::set<std::uint64_t> seeds;
  for (const auto& s : a) seeds.insert(s.config.seed);
  for (const auto& s : validation_scenes(cfg.train)) CHECK(seeds.count(s.config.seed) == 0);

  auto r1 = run_benchmark(cfg, a);
  auto r2 = run_benchmark(cfg, a);
  CHECK(r1.test.mae == r2.test.mae);
  CHECK(r1.train.model.params == r2.train.model.params);
}

TEST_CASE("ablation_run") {
  auto cfg = tiny_benchmark();
  auto t1 = ablation_run(5, {0, 2}, {true, false}, 2, cfg);
  auto t2 = ablation_run(5, {0, 2}, {true, false}, 2, cfg, 3);
  CHECK(ablation_csv(t1) == ablation_csv(t2));
  CHECK(t1.rows.size() == 8);
  CHECK(t1.cells.size() == 4);

  // Every cell of a repeat shares its scene stream.
  for (const auto& row : t1.rows) {
    for (const auto& other : t1.rows) {
      if (row.repeat == other.repeat) CHECK(row.stream_hash == other.stream_hash);
    }
  }

  SUBCASE("a single cell reproduces a direct run") {
    auto single = ablation_run(5, {2}, {true}, 1, cfg);
    BenchmarkConfig direct = cfg;
    direct.train.n = 2;
    direct.train.with_regularizer = true;
    direct.train.seed = derive_seed(5, {0});
    const auto tests = test_scenes(cfg);
    auto r = run_benchmark(direct, tests);
    CHECK(single.rows[0].mae == r.test.mae);
    CHECK(single.rows[0].mse == r.test.mse);
  }

  SUBCASE("cell statistics") {
    for (const auto& cell : t1.cells) {
      double sum = 0.0;
      for (const auto& row : t1.rows)
        if (row.n == cell.n && row.with_regularizer == cell.with_regularizer) sum += row.mae;
      CHECK(cell.mean_mae == doctest::Approx(sum / 2.0));
      CHECK(cell.std_mae >= 0.0);
    }
  }

  SUBCASE("output formats") {
    const std::string csv = ablation_csv(t1);
    CHECK(csv.rfind("cell,repeat,mae,mse\nn=0;reg=on,0,", 0) == 0);
    const std::string summary = ablation_summary(t1);
    CHECK(summary.find("n=2;reg=off") != std::string::npos);
    CHECK(summary.find("mean_mae") != std::string::npos);
  }

  CHECK_THROWS_AS(ablation_run(5, {5}, {true}, 1, cfg), InvalidArgument);
  CHECK_THROWS_AS(ablation_run(5, {1}, {true}, 0, cfg), InvalidArgument);
  CHECK_THROWS_AS(ablation_run(5, {}, {true}, 1, cfg), InvalidArgument);
}
