#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pml/errors.hpp"
#include "pml/loss.hpp"
#include "pml/model.hpp"
#include "pml/scene.hpp"

namespace pml {

enum class LossKind { pml, l2 };

LossKind parse_loss_kind(const std::string& s);
std::string to_string(LossKind k);

struct TrainConfig {
  LossKind loss = LossKind::pml;
  int n = 4;
  bool with_regularizer = true;  // pml only: add L2^L without a log
  int steps = 2000;
  double lr = 1e-4;
  double clip_norm = 10.0;  // global L2 norm; <= 0 disables clipping
  int batch = 4;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  // Adam moment decays and denominator guard.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int steps_per_epoch = 100;
  int val_scenes = 32;
  SceneConfig scenes;  // template; its seed is replaced per scene
};

void validate(const TrainConfig& cfg);

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  bool clipped = false;
  std::optional<double> val_mae;
  std::optional<double> val_mse;
};

struct TrainResult {
  TinyModel model;
  std::vector<TraceRow> trace;
  std::uint64_t stream_hash = 0;  // fingerprint of every training scene used
};

/// Raised when the training loss becomes non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::string snapshot)
      : Error(what), snapshot_(std::move(snapshot)) {}
  const std::string& snapshot() const noexcept { return snapshot_; }

 private:
  std::string snapshot_;
};

struct ClipResult {
  double norm = 0.0;
  double scale = 1.0;
  bool clipped = false;
};

/// Scales `grad` in place so its L2 norm is at most clip_norm.
ClipResult clip_gradient(std::span<double> grad, double clip_norm);

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  /// One bias-corrected update of `params` from `grad`.
  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

/// Loss value and d(loss)/d(pred) for one batch under the configured kind.
struct BatchLoss {
  double value = 0.0;
  std::vector<DensityMap> grad;
};
BatchLoss batch_loss(const TrainConfig& cfg, MapBatch preds, MapBatch gts);

/// Loss and parameter gradient of `model` on a batch of scenes.
double parameter_gradient(const TinyModel& model, const TrainConfig& cfg,
                          std::span<const Scene> scenes, std::span<double> grad);

/// Training scene `slot` of `epoch` for a given run seed.
SceneConfig training_scene_config(const TrainConfig& cfg, int epoch, int slot);
std::vector<Scene> validation_scenes(const TrainConfig& cfg);

/// Adam training with global-norm clipping. Each epoch draws fresh scenes from
/// an epoch-indexed seed; validation MAE/MSE is logged at the end of every
/// epoch and after the final step.
TrainResult train(TinyModel model, const TrainConfig& cfg);

/// CSV: step,loss,grad_norm,clipped,val_mae,val_mse (validation columns empty
/// on rows without an evaluation).
std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace pml
