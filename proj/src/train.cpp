#include "pml/train.hpp"

#include <cmath>
#include <sstream>

#include "pml/eval.hpp"
#include "pml/io.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace {

// Stream tags keep training, validation and initialization draws apart.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kValStream = 2;

std::string snapshot(int step, double loss, double grad_norm, const TinyModel& m) {
  double pn = 0.0;
  for (double p : m.params) pn += p * p;
  std::ostringstream os;
  os << "step=" << step << " loss=" << io::format_double(loss)
     << " grad_norm=" << io::format_double(grad_norm)
     << " param_norm=" << io::format_double(std::sqrt(pn)) << " params=[";
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (i) os << ' ';
    os << io::format_double(m.params[i]);
  }
  os << ']';
  return os.str();
}

}  // namespace

LossKind parse_loss_kind(const std::string& s) {
  if (s == "pml") return LossKind::pml;
  if (s == "l2") return LossKind::l2;
  throw InvalidArgument("unknown loss kind '" + s + "' (expected pml or l2)");
}

std::string to_string(LossKind k) { return k == LossKind::pml ? "pml" : "l2"; }

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& what) { throw InvalidArgument("TrainConfig: " + what); };
  if (cfg.steps < 1) fail("steps must be >= 1");
  if (!(cfg.lr >= 0.0)) fail("lr must be >= 0");
  if (cfg.batch < 1) fail("batch must be >= 1");
  if (cfg.steps_per_epoch < 1) fail("steps_per_epoch must be >= 1");
  if (cfg.val_scenes < 0) fail("val_scenes must be >= 0");
  if (cfg.loss == LossKind::pml && (cfg.n < 0 || cfg.n > cfg.scenes.gt_level)) {
    fail("n must lie in [0, L]");
  }
  if (!(cfg.epsilon > 0.0)) fail("epsilon must be > 0");
  if (cfg.scenes.obs_level != cfg.scenes.gt_level) {
    fail("obs_level must equal gt_level (same-resolution prediction)");
  }
  validate(cfg.scenes);
}

ClipResult clip_gradient(std::span<double> grad, double clip_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  ClipResult r;
  r.norm = std::sqrt(sq);
  if (clip_norm > 0.0 && r.norm > clip_norm) {
    r.scale = clip_norm / r.norm;
    r.clipped = true;
    for (double& g : grad) g *= r.scale;
  }
  return r;
}

AdamOptimizer::AdamOptimizer(std::size_t size, double lr, double beta1, double beta2,
                             double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InvalidArgument("AdamOptimizer: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
  }
}

BatchLoss batch_loss(const TrainConfig& cfg, MapBatch preds, MapBatch gts) {
  BatchLoss out;
  if (cfg.loss == LossKind::l2) {
    out.value = l2_level(preds, gts, preds[0].level());
    out.grad = l2_gradient(preds, gts);
  } else {
    out.value = total_loss(preds, gts, cfg.n, cfg.epsilon, cfg.with_regularizer).total;
    out.grad = loss_gradient(preds, gts, cfg.n, cfg.epsilon, cfg.with_regularizer);
  }
  return out;
}

double parameter_gradient(const TinyModel& model, const TrainConfig& cfg,
                          std::span<const Scene> scenes, std::span<double> grad) {
  std::vector<ForwardTrace> traces;
  std::vector<DensityMap> preds;
  std::vector<DensityMap> gts;
  traces.reserve(scenes.size());
  for (const Scene& s : scenes) {
    traces.push_back(forward_traced(model, s.observation));
    preds.push_back(traces.back().output);
    gts.push_back(s.gt_map);
  }
  BatchLoss bl = batch_loss(cfg, preds, gts);
  for (std::size_t b = 0; b < scenes.size(); ++b) backward(model, traces[b], bl.grad[b], grad);
  return bl.value;
}

SceneConfig training_scene_config(const TrainConfig& cfg, int epoch, int slot) {
  SceneConfig sc = cfg.scenes;
  sc.seed = derive_seed(cfg.seed, {kTrainStream, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(slot)});
  return sc;
}

std::vector<Scene> validation_scenes(const TrainConfig& cfg) {
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(cfg.val_scenes));
  for (int i = 0; i < cfg.val_scenes; ++i) {
    SceneConfig sc = cfg.scenes;
    sc.seed = derive_seed(cfg.seed, {kValStream, static_cast<std::uint64_t>(i)});
    out.push_back(generate_scene(sc));
  }
  return out;
}

TrainResult train(TinyModel model, const TrainConfig& cfg) {
  validate(cfg);
  if (model.arch.level != cfg.scenes.gt_level) {
    throw InvalidArgument("model level does not match the scene level");
  }
  TrainResult result;
  const std::vector<Scene> val = validation_scenes(cfg);
  AdamOptimizer opt(model.param_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
  std::vector<double> grad(model.param_count());
  std::uint64_t stream = 0xcbf29ce484222325ULL;

  for (int step = 0; step < cfg.steps; ++step) {
    const int epoch = step / cfg.steps_per_epoch;
    const int first_slot = (step % cfg.steps_per_epoch) * cfg.batch;
    std::vector<Scene> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch));
    for (int b = 0; b < cfg.batch; ++b) {
      batch.push_back(generate_scene(training_scene_config(cfg, epoch, first_slot + b)));
      const std::uint64_t fp = fingerprint(batch.back());
      stream = fnv1a(&fp, sizeof fp, stream);
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = parameter_gradient(model, cfg, batch, grad);
    const ClipResult clip = clip_gradient(grad, cfg.clip_norm);
    if (!std::isfinite(loss) || !std::isfinite(clip.norm)) {
      throw DivergenceError("training diverged at step " + std::to_string(step),
                            snapshot(step, loss, clip.norm, model));
    }
    opt.step(model.params, grad);

    TraceRow row;
    row.step = step;
    row.loss = loss;
    row.grad_norm = clip.norm;
    row.clipped = clip.clipped;
    const bool epoch_end = (step + 1) % cfg.steps_per_epoch == 0 || step + 1 == cfg.steps;
    if (epoch_end && !val.empty()) {
      const MetricsSummary m = evaluate_model(model, val);
      row.val_mae = m.mae;
      row.val_mse = m.mse;
    }
    result.trace.push_back(row);
  }
  result.model = std::move(model);
  result.stream_hash = stream;
  return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "step,loss,grad_norm,clipped,val_mae,val_mse\n";
  for (const auto& r : trace) {
    os << r.step << ',' << io::format_double(r.loss) << ',' << io::format_double(r.grad_norm)
       << ',' << (r.clipped ? 1 : 0) << ',';
    if (r.val_mae) os << io::format_double(*r.val_mae);
    os << ',';
    if (r.val_mse) os << io::format_double(*r.val_mse);
    os << '\n';
  }
  return os.str();
}

}  // namespace pml
