#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pml/loss.hpp"
#include "pml/model.hpp"
#include "pml/scene.hpp"
#include "pml/train.hpp"

namespace pml {

/// Counting metrics. `mse` is the root of the mean squared count error.
struct MetricsSummary {
  double mae = 0.0;
  double mse = 0.0;
  std::vector<std::pair<double, double>> per_sample;  // (estimated, true)
};

/// Per-map counts are map sums; MAE = mean |est - true|,
/// MSE = sqrt(mean (est - true)^2).
MetricsSummary evaluate(MapBatch preds, MapBatch gts);

/// Runs the model over scenes and scores its maps against the ground truth.
MetricsSummary evaluate_model(const TinyModel& model, std::span<const Scene> scenes);

/// Settings shared by the benchmark runs.
struct BenchmarkConfig {
  TrainConfig train;
  ModelArch arch;
  double init_output_bias = -4.0;
  int test_scenes = 200;
  std::uint64_t test_seed = 0x7e57;
};

/// Desk-scale default: L = 6 maps, n = 4, 2000 steps, 200 test scenes.
/// Uses a larger learning rate than the CLI default; see README.
BenchmarkConfig default_benchmark();

std::vector<Scene> test_scenes(const BenchmarkConfig& cfg);

struct BenchmarkResult {
  TrainResult train;
  MetricsSummary test;
};

/// Fresh model (init seeded from cfg.train.seed), training, then test metrics.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg,
                              std::span<const Scene> tests);

struct AblationRow {
  int n = 0;
  bool with_regularizer = true;
  int repeat = 0;
  double mae = 0.0;
  double mse = 0.0;
  std::uint64_t stream_hash = 0;
};

struct AblationCell {
  int n = 0;
  bool with_regularizer = true;
  double mean_mae = 0.0;
  double std_mae = 0.0;  // population standard deviation over repeats
  double mean_mse = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationCell> cells;
};

std::string cell_key(int n, bool with_regularizer);

/// Trains a fresh PML model per (n, regularizer, repeat). Repeat r uses the
/// run seed derive_seed(base_seed, {r}) for every cell, so all cells of a
/// repeat see the same scene stream and the same initialization.
AblationTable ablation_run(std::uint64_t base_seed, const std::vector<int>& n_values,
                           const std::vector<bool>& with_reg, int repeats,
                           const BenchmarkConfig& base, unsigned threads = 1);

/// CSV: cell,repeat,mae,mse
std::string ablation_csv(const AblationTable& table);
/// Fixed-width table of per-cell mean/std MAE and mean MSE.
std::string ablation_summary(const AblationTable& table);

}  // namespace pml
