#include "pml/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pml/errors.hpp"
#include "pml/eval.hpp"
#include "pml/io.hpp"
#include "pml/likelihood.hpp"
#include "pml/loss.hpp"
#include "pml/pyramid.hpp"
#include "pml/rng.hpp"
#include "pml/train.hpp"

namespace fs = std::filesystem;

namespace pml::cli {

namespace {

// Resolved settings, echoed as "# key: value" before any result.
class Echo {
 public:
  explicit Echo(std::string command) { add("command", std::move(command)); }
  void add(const std::string& key, std::string value) { items_.emplace_back(key, std::move(value)); }
  void add(const std::string& key, double v) { add(key, io::format_double(v)); }
  void add(const std::string& key, long long v) { add(key, std::to_string(v)); }
  void add(const std::string& key, int v) { add(key, std::to_string(v)); }
  void add(const std::string& key, std::uint64_t v) { add(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { add(key, std::string(v ? "true" : "false")); }

  void print(std::ostream& out) const {
    for (const auto& [k, v] : items_) out << "# " << k << ": " << v << '\n';
  }
  nlohmann::ordered_json json() const {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : items_) j[k] = v;
    return j;
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

DensityMap load_map(const fs::path& p) { return io::read_dmap(p); }

std::vector<fs::path> paired_files(const fs::path& pred, const fs::path& gt,
                                   std::vector<DensityMap>& preds,
                                   std::vector<DensityMap>& gts) {
  const auto pf = io::collect_dmaps(pred);
  const auto gf = io::collect_dmaps(gt);
  if (pf.size() != gf.size()) {
    throw InvalidArgument("prediction and ground-truth file counts differ (" +
                          std::to_string(pf.size()) + " vs " + std::to_string(gf.size()) + ")");
  }
  if (fs::is_directory(pred) && fs::is_directory(gt)) {
    for (std::size_t i = 0; i < pf.size(); ++i) {
      if (pf[i].filename() != gf[i].filename()) {
        throw InvalidArgument("unpaired file " + pf[i].filename().string() + " vs " +
                              gf[i].filename().string());
      }
    }
  }
  for (const auto& p : pf) preds.push_back(load_map(p));
  for (const auto& g : gf) gts.push_back(load_map(g));
  return pf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-resolution density-map loss toolkit", "pml"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  std::function<int()> action;

  // rasterize
  auto* ras = app.add_subcommand("rasterize", "Point CSV -> count map");
  std::string ras_points, ras_out;
  double ras_size = 0.0;
  int ras_level = 0;
  ras->add_option("--points", ras_points, "x,y CSV")->required();
  ras->add_option("--scene-size", ras_size, "Scene side length")->required();
  ras->add_option("--level", ras_level, "Output level (side 2^level)")->required();
  ras->add_option("--out", ras_out, "Output .dmap")->required();
  ras->callback([&] {
    action = [&] {
      Echo echo("rasterize");
      echo.add("points", ras_points);
      echo.add("scene_size", ras_size);
      echo.add("level", ras_level);
      echo.add("out", ras_out);
      echo.print(out);
      PointAnnotations ann{io::read_points_csv(fs::path(ras_points)), ras_size};
      const DensityMap m = rasterize(ann, ras_level);
      io::write_dmap(fs::path(ras_out), m);
      out << "points: " << ann.points.size() << '\n';
      out << "count: " << io::format_double(m.sum()) << '\n';
      return kOk;
    };
  });

  // pyramid
  auto* pyr = app.add_subcommand("pyramid", "Sum-pooled pyramid of a .dmap");
  std::string pyr_in, pyr_out;
  std::vector<int> pyr_levels;
  pyr->add_option("--in", pyr_in, "Input .dmap")->required();
  pyr->add_option("--levels", pyr_levels, "Levels to emit (default: all)")->delimiter(',');
  pyr->add_option("--out-dir", pyr_out, "Directory for level_<i>.dmap files")->required();
  pyr->callback([&] {
    action = [&] {
      const DensityMap m = load_map(pyr_in);
      std::vector<int> levels = pyr_levels;
      if (levels.empty()) {
        for (int l = 0; l <= m.level(); ++l) levels.push_back(l);
      }
      std::sort(levels.begin(), levels.end());
      Echo echo("pyramid");
      echo.add("in", pyr_in);
      echo.add("levels", join(levels));
      echo.add("out_dir", pyr_out);
      echo.print(out);
      const Pyramid p = build_pyramid(m, ResolutionSet(levels));
      fs::create_directories(pyr_out);
      for (std::size_t i = 0; i < p.levels.size(); ++i) {
        const auto name = "level_" + std::to_string(p.levels[i]) + ".dmap";
        io::write_dmap(fs::path(pyr_out) / name, p.maps[i]);
        out << name << " sum: " << io::format_double(p.maps[i].sum()) << '\n';
      }
      return kOk;
    };
  });

  // loss
  auto* los = app.add_subcommand("loss", "Loss breakdown for prediction/ground-truth maps");
  std::string los_pred, los_gt;
  int los_n = 4;
  bool los_no_reg = false;
  bool los_json = false;
  double los_eps = kDefaultEpsilon;
  los->add_option("--pred", los_pred, ".dmap file or directory")->required();
  los->add_option("--gt", los_gt, ".dmap file or directory")->required();
  los->add_option("--n", los_n, "Finest difference level")->capture_default_str();
  los->add_flag("--no-reg", los_no_reg, "Drop the plain L2 term at the prediction level");
  los->add_option("--eps", los_eps, "Log guard")->capture_default_str();
  los->add_flag("--json", los_json, "Emit JSON");
  los->callback([&] {
    action = [&] {
      Echo echo("loss");
      echo.add("pred", los_pred);
      echo.add("gt", los_gt);
      echo.add("n", los_n);
      echo.add("regularizer", !los_no_reg);
      echo.add("eps", los_eps);
      std::vector<DensityMap> preds, gts;
      paired_files(los_pred, los_gt, preds, gts);
      echo.add("batch", static_cast<int>(preds.size()));
      const auto b = total_loss(preds, gts, los_n, los_eps, !los_no_reg);
      if (los_json) {
        nlohmann::ordered_json j;
        j["config"] = echo.json();
        j["loss"] = nlohmann::ordered_json::parse(to_json(b));
        out << j.dump(2) << '\n';
      } else {
        echo.print(out);
        out << to_text(b);
      }
      return kOk;
    };
  });

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "Analytic vs finite-difference gradient on a random batch");
  std::uint64_t gc_seed = 0;
  int gc_level = 5, gc_n = 4, gc_batch = 2;
  double gc_tol = 1e-5;
  bool gc_no_reg = false;
  gc->add_option("--seed", gc_seed)->capture_default_str();
  gc->add_option("--level", gc_level, "Map level L")->capture_default_str();
  gc->add_option("--n", gc_n)->capture_default_str();
  gc->add_option("--tol", gc_tol, "Maximum relative error")->capture_default_str();
  gc->add_option("--batch", gc_batch)->capture_default_str()->check(CLI::PositiveNumber);
  gc->add_flag("--no-reg", gc_no_reg);
  gc->callback([&] {
    action = [&] {
      Echo echo("grad-check");
      echo.add("seed", gc_seed);
      echo.add("level", gc_level);
      echo.add("n", gc_n);
      echo.add("tol", gc_tol);
      echo.add("batch", gc_batch);
      echo.add("regularizer", !gc_no_reg);
      echo.print(out);
      check_level(gc_level, "grad-check");
      SplitMix64 rng(gc_seed);
      std::vector<DensityMap> preds, gts;
      for (int b = 0; b < gc_batch; ++b) {
        gts.push_back(random_uniform_map(rng, gc_level, 0.0, 2.0));
        std::vector<double> p(gts.back().values().begin(), gts.back().values().end());
        for (double& v : p) v += rng.uniform(-1.0, 1.0);
        preds.emplace_back(gc_level, std::move(p));
      }
      const auto r = check_gradient(preds, gts, gc_n, kDefaultEpsilon, !gc_no_reg);
      out << "entries: " << r.entries << '\n';
      out << "max_abs_error: " << io::format_double(r.max_abs_error) << '\n';
      out << "gradient_scale: " << io::format_double(r.gradient_scale) << '\n';
      out << "max_rel_error: " << io::format_double(r.relative_error) << '\n';
      const bool ok = r.relative_error < gc_tol;
      out << "status: " << (ok ? "pass" : "fail") << '\n';
      return ok ? kOk : kFailure;
    };
  });

  // verify-theorem
  auto* vt = app.add_subcommand("verify-theorem", "Dense vs sparse resolution-set likelihood trials");
  int vt_trials = 1000, vt_level = 5, vt_nk = 3;
  std::uint64_t vt_seed = 0;
  std::string vt_out;
  vt->add_option("--trials", vt_trials)->capture_default_str();
  vt->add_option("--seed", vt_seed)->capture_default_str();
  vt->add_option("--level", vt_level, "Map level L")->capture_default_str();
  vt->add_option("--nk", vt_nk, "Finest sub-level shared by both sets")->capture_default_str();
  vt->add_option("--out", vt_out, "Per-trial CSV");
  vt->callback([&] {
    action = [&] {
      Echo echo("verify-theorem");
      echo.add("trials", vt_trials);
      echo.add("seed", vt_seed);
      echo.add("level", vt_level);
      echo.add("nk", vt_nk);
      echo.add("out", vt_out.empty() ? std::string("-") : vt_out);
      echo.add("threads", static_cast<int>(threads));
      echo.print(out);
      const auto r = verify_theorem(vt_trials, vt_seed, vt_level, vt_nk, threads);
      if (!vt_out.empty()) write_text(vt_out, theorem_csv(r));
      double min_diff = INFINITY;
      for (const auto& t : r.trials) min_diff = std::min(min_diff, t.diff);
      out << "trials: " << r.trials.size() << '\n';
      out << "min_diff: " << io::format_double(min_diff) << '\n';
      out << "violations: " << r.violations << '\n';
      return r.violations == 0 ? kOk : kFailure;
    };
  });

  // train-demo
  auto* td = app.add_subcommand("train-demo", "Train the small model on synthetic scenes");
  BenchmarkConfig td_cfg = default_benchmark();
  td_cfg.train.lr = 1e-4;
  std::string td_loss = "pml", td_out, td_dump;
  bool td_no_reg = false;
  td->add_option("--seed", td_cfg.train.seed)->capture_default_str();
  td->add_option("--steps", td_cfg.train.steps)->capture_default_str();
  td->add_option("--loss", td_loss, "pml or l2")->capture_default_str()->check(CLI::IsMember({"pml", "l2"}));
  td->add_option("--n", td_cfg.train.n)->capture_default_str();
  td->add_option("--lr", td_cfg.train.lr)->capture_default_str();
  td->add_option("--clip", td_cfg.train.clip_norm, "Global gradient norm clip (<= 0 disables)")->capture_default_str();
  td->add_option("--batch", td_cfg.train.batch)->capture_default_str();
  td->add_option("--hidden", td_cfg.arch.hidden_channels, "Hidden channels")->capture_default_str();
  td->add_option("--test-scenes", td_cfg.test_scenes)->capture_default_str();
  td->add_flag("--no-reg", td_no_reg, "PML without the plain L2 term");
  td->add_option("--out", td_out, "Training trace CSV")->required();
  td->add_option("--dump-test", td_dump, "Write test predictions and ground truth here");
  td->callback([&] {
    action = [&] {
      auto& t = td_cfg.train;
      t.loss = parse_loss_kind(td_loss);
      t.with_regularizer = !td_no_reg;
      Echo echo("train-demo");
      echo.add("seed", t.seed);
      echo.add("steps", t.steps);
      echo.add("loss", to_string(t.loss));
      echo.add("n", t.n);
      echo.add("regularizer", t.with_regularizer);
      echo.add("lr", t.lr);
      echo.add("clip", t.clip_norm);
      echo.add("batch", t.batch);
      echo.add("hidden", td_cfg.arch.hidden_channels);
      echo.add("level", t.scenes.gt_level);
      echo.add("test_scenes", td_cfg.test_scenes);
      echo.add("out", td_out);
      echo.print(out);
      const auto tests = test_scenes(td_cfg);
      const auto r = run_benchmark(td_cfg, tests);
      write_text(td_out, trace_csv(r.train.trace));
      if (!td_dump.empty()) {
        fs::create_directories(fs::path(td_dump) / "pred");
        fs::create_directories(fs::path(td_dump) / "gt");
        char name[32];
        for (std::size_t i = 0; i < tests.size(); ++i) {
          std::snprintf(name, sizeof name, "scene_%04zu.dmap", i);
          io::write_dmap(fs::path(td_dump) / "pred" / name, forward(r.train.model, tests[i].observation));
          io::write_dmap(fs::path(td_dump) / "gt" / name, tests[i].gt_map);
        }
      }
      const auto& last = r.train.trace.back();
      out << "final_loss: " << io::format_double(last.loss) << '\n';
      out << "val_mae: " << io::format_double(last.val_mae.value_or(NAN)) << '\n';
      out << "test_mae: " << io::format_double(r.test.mae) << '\n';
      out << "test_mse: " << io::format_double(r.test.mse) << '\n';
      return kOk;
    };
  });

  // ablate
  auto* ab = app.add_subcommand("ablate", "Sweep n with and without the L2 regularizer");
  BenchmarkConfig ab_cfg = default_benchmark();
  std::uint64_t ab_seed = 0;
  std::vector<int> ab_n{0, 1, 2, 3, 4, 5};
  int ab_repeats = 1;
  std::string ab_out;
  ab->add_option("--seed", ab_seed)->capture_default_str();
  ab->add_option("--n-values", ab_n)->delimiter(',')->capture_default_str();
  ab->add_option("--repeats", ab_repeats)->capture_default_str();
  ab->add_option("--steps", ab_cfg.train.steps)->capture_default_str();
  ab->add_option("--lr", ab_cfg.train.lr)->capture_default_str();
  ab->add_option("--test-scenes", ab_cfg.test_scenes)->capture_default_str();
  ab->add_option("--out", ab_out, "Per-run CSV")->required();
  ab->callback([&] {
    action = [&] {
      Echo echo("ablate");
      echo.add("seed", ab_seed);
      echo.add("n_values", join(ab_n));
      echo.add("repeats", ab_repeats);
      echo.add("steps", ab_cfg.train.steps);
      echo.add("lr", ab_cfg.train.lr);
      echo.add("clip", ab_cfg.train.clip_norm);
      echo.add("hidden", ab_cfg.arch.hidden_channels);
      echo.add("test_scenes", ab_cfg.test_scenes);
      echo.add("threads", static_cast<int>(threads));
      echo.add("out", ab_out);
      echo.print(out);
      const auto t = ablation_run(ab_seed, ab_n, {true, false}, ab_repeats, ab_cfg, threads);
      write_text(ab_out, ablation_csv(t));
      out << ablation_summary(t);
      return kOk;
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Count MAE/MSE over paired .dmap files");
  std::string ev_pred, ev_gt;
  ev->add_option("--pred-dir", ev_pred)->required();
  ev->add_option("--gt-dir", ev_gt)->required();
  ev->callback([&] {
    action = [&] {
      Echo echo("eval");
      echo.add("pred_dir", ev_pred);
      echo.add("gt_dir", ev_gt);
      echo.print(out);
      std::vector<DensityMap> preds, gts;
      paired_files(ev_pred, ev_gt, preds, gts);
      const auto m = evaluate(preds, gts);
      out << "samples: " << preds.size() << '\n';
      out << "mae: " << io::format_double(m.mae) << '\n';
      out << "mse: " << io::format_double(m.mse) << '\n';
      return kOk;
    };
  });

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace pml::cli
