#include "pml/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "pml/errors.hpp"
#include "pml/io.hpp"
#include "pml/parallel.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace {

constexpr std::uint64_t kInitStream = 3;

}  // namespace

MetricsSummary evaluate(MapBatch preds, MapBatch gts) {
  if (preds.empty()) throw InvalidArgument("evaluate: empty batch");
  if (preds.size() != gts.size()) throw InvalidArgument("evaluate: batch size mismatch");
  MetricsSummary m;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double est = preds[k].sum();
    const double truth = gts[k].sum();
    m.per_sample.emplace_back(est, truth);
    const double e = est - truth;
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto count = static_cast<double>(preds.size());
  m.mae = abs_sum / count;
  m.mse = std::sqrt(sq_sum / count);
  return m;
}

MetricsSummary evaluate_model(const TinyModel& model, std::span<const Scene> scenes) {
  std::vector<DensityMap> preds;
  std::vector<DensityMap> gts;
  preds.reserve(scenes.size());
  gts.reserve(scenes.size());
  for (const Scene& s : scenes) {
    preds.push_back(forward(model, s.observation));
    gts.push_back(s.gt_map);
  }
  return evaluate(preds, gts);
}

BenchmarkConfig default_benchmark() {
  BenchmarkConfig cfg;
  cfg.train.loss = LossKind::pml;
  cfg.train.n = 4;
  cfg.train.with_regularizer = true;
  cfg.train.steps = 2000;
  cfg.train.lr = 3e-3;
  cfg.train.clip_norm = 10.0;
  cfg.train.batch = 4;
  cfg.arch.hidden_channels = 4;
  cfg.arch.level = cfg.train.scenes.gt_level;
  return cfg;
}

std::vector<Scene> test_scenes(const BenchmarkConfig& cfg) {
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(cfg.test_scenes));
  for (int i = 0; i < cfg.test_scenes; ++i) {
    SceneConfig sc = cfg.train.scenes;
    sc.seed = derive_seed(cfg.test_seed, {static_cast<std::uint64_t>(i)});
    out.push_back(generate_scene(sc));
  }
  return out;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::span<const Scene> tests) {
  TinyModel model = init_model(cfg.arch, derive_seed(cfg.train.seed, {kInitStream}),
                               cfg.init_output_bias);
  BenchmarkResult r;
  r.train = train(std::move(model), cfg.train);
  r.test = evaluate_model(r.train.model, tests);
  return r;
}

std::string cell_key(int n, bool with_regularizer) {
  return "n=" + std::to_string(n) + ";reg=" + (with_regularizer ? "on" : "off");
}

AblationTable ablation_run(std::uint64_t base_seed, const std::vector<int>& n_values,
                           const std::vector<bool>& with_reg, int repeats,
                           const BenchmarkConfig& base, unsigned threads) {
  if (repeats < 1) throw InvalidArgument("ablation_run: repeats must be >= 1");
  if (n_values.empty() || with_reg.empty()) throw InvalidArgument("ablation_run: empty sweep");
  for (int n : n_values) {
    if (n < 0 || n > base.train.scenes.gt_level) {
      throw InvalidArgument("ablation_run: n=" + std::to_string(n) + " outside [0, L]");
    }
  }
  const std::vector<Scene> tests = test_scenes(base);

  AblationTable table;
  for (int n : n_values) {
    for (bool reg : with_reg) {
      for (int r = 0; r < repeats; ++r) table.rows.push_back({n, reg, r, 0.0, 0.0, 0});
    }
  }
  parallel_for(table.rows.size(), threads, [&](std::size_t i) {
    AblationRow& row = table.rows[i];
    BenchmarkConfig cfg = base;
    cfg.train.loss = LossKind::pml;
    cfg.train.n = row.n;
    cfg.train.with_regularizer = row.with_regularizer;
    cfg.train.seed = derive_seed(base_seed, {static_cast<std::uint64_t>(row.repeat)});
    const BenchmarkResult res = run_benchmark(cfg, tests);
    row.mae = res.test.mae;
    row.mse = res.test.mse;
    row.stream_hash = res.train.stream_hash;
  });

  for (int n : n_values) {
    for (bool reg : with_reg) {
      AblationCell cell{n, reg, 0.0, 0.0, 0.0};
      std::vector<double> maes;
      for (const auto& row : table.rows) {
        if (row.n == n && row.with_regularizer == reg) {
          maes.push_back(row.mae);
          cell.mean_mse += row.mse;
        }
      }
      const auto k = static_cast<double>(maes.size());
      for (double v : maes) cell.mean_mae += v;
      cell.mean_mae /= k;
      cell.mean_mse /= k;
      for (double v : maes) cell.std_mae += (v - cell.mean_mae) * (v - cell.mean_mae);
      cell.std_mae = std::sqrt(cell.std_mae / k);
      table.cells.push_back(cell);
    }
  }
  return table;
}

std::string ablation_csv(const AblationTable& table) {
  std::ostringstream os;
  os << "cell,repeat,mae,mse\n";
  for (const auto& r : table.rows) {
    os << cell_key(r.n, r.with_regularizer) << ',' << r.repeat << ','
       << io::format_double(r.mae) << ',' << io::format_double(r.mse) << '\n';
  }
  return os.str();
}

std::string ablation_summary(const AblationTable& table) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %12s %12s %12s\n", "cell", "mean_mae", "std_mae",
                "mean_mse");
  os << line;
  for (const auto& c : table.cells) {
    std::snprintf(line, sizeof line, "%-14s %12.4f %12.4f %12.4f\n",
                  cell_key(c.n, c.with_regularizer).c_str(), c.mean_mae, c.std_mae, c.mean_mse);
    os << line;
  }
  return os.str();
}

}  // namespace pml
