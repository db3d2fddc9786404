#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pml/density_map.hpp"

namespace pml {

/// 1 -> hidden_channels -> 1 convolutional regressor with 3x3 kernels and zero
/// "same" padding: h = tanh(conv(x) + b1), z = conv(h) + b2, y = softplus(z).
struct ModelArch {
  int hidden_channels = 6;
  int level = 6;  // input and output side 2^level
};

/// Parameter layout: w1[c][3][3], b1[c], w2[c][3][3], b2.
struct TinyModel {
  ModelArch arch;
  std::vector<double> params;

  std::size_t param_count() const noexcept { return param_count_for(arch); }
  static std::size_t param_count_for(const ModelArch& arch) noexcept {
    const auto c = static_cast<std::size_t>(arch.hidden_channels);
    return 9 * c + c + 9 * c + 1;
  }
};

/// All-zero parameters.
TinyModel zero_model(const ModelArch& arch);

/// Small uniform fan-in weights, zero hidden biases, and an output bias of
/// `output_bias` so the initial map starts near softplus(output_bias).
TinyModel init_model(const ModelArch& arch, std::uint64_t seed,
                     double output_bias = -4.0);

/// Intermediate activations kept for backpropagation.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<double> hidden;          // c * side^2, after tanh
  std::vector<double> preactivation;   // side^2, before softplus
  DensityMap output;
};

ForwardTrace forward_traced(const TinyModel& model, const DensityMap& observation);

/// Non-negative predicted density map at arch.level. Throws InvalidArgument
/// when the observation level differs.
DensityMap forward(const TinyModel& model, const DensityMap& observation);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void backward(const TinyModel& model, const ForwardTrace& trace,
              const DensityMap& output_grad, std::span<double> grad);

double softplus(double z) noexcept;

}  // namespace pml
