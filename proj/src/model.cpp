#include "pml/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pml/errors.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace {

void check_arch(const ModelArch& arch) {
  if (arch.hidden_channels < 1) throw InvalidArgument("model needs >= 1 hidden channel");
  check_level(arch.level, "ModelArch");
}

// out[r][c] += sum_{ky,kx} k[ky][kx] * in[r+ky-1][c+kx-1], zero outside.
void conv3x3_accumulate(const double* in, const double* k, double* out, std::size_t side) {
  const auto n = static_cast<std::ptrdiff_t>(side);
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      const double w = k[ky * 3 + kx];
      const std::ptrdiff_t dy = ky - 1;
      const std::ptrdiff_t dx = kx - 1;
      const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, -dy);
      const std::ptrdiff_t r1 = std::min<std::ptrdiff_t>(n, n - dy);
      const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dx);
      const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(n, n - dx);
      for (std::ptrdiff_t r = r0; r < r1; ++r) {
        const double* src = in + (r + dy) * n + dx;
        double* dst = out + r * n;
        for (std::ptrdiff_t c = c0; c < c1; ++c) dst[c] += w * src[c];
      }
    }
  }
}

// dk[ky][kx] += sum_{r,c} g[r][c] * in[r+ky-1][c+kx-1]
void conv3x3_kernel_grad(const double* in, const double* g, double* dk, std::size_t side) {
  const auto n = static_cast<std::ptrdiff_t>(side);
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      const std::ptrdiff_t dy = ky - 1;
      const std::ptrdiff_t dx = kx - 1;
      const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, -dy);
      const std::ptrdiff_t r1 = std::min<std::ptrdiff_t>(n, n - dy);
      const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dx);
      const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(n, n - dx);
      double acc = 0.0;
      for (std::ptrdiff_t r = r0; r < r1; ++r) {
        const double* src = in + (r + dy) * n + dx;
        const double* gr = g + r * n;
        for (std::ptrdiff_t c = c0; c < c1; ++c) acc += gr[c] * src[c];
      }
      dk[ky * 3 + kx] += acc;
    }
  }
}

// din[r+ky-1][c+kx-1] += k[ky][kx] * g[r][c]: the transpose of the forward conv.
void conv3x3_input_grad(const double* g, const double* k, double* din, std::size_t side) {
  const auto n = static_cast<std::ptrdiff_t>(side);
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      const double w = k[ky * 3 + kx];
      const std::ptrdiff_t dy = ky - 1;
      const std::ptrdiff_t dx = kx - 1;
      const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, -dy);
      const std::ptrdiff_t r1 = std::min<std::ptrdiff_t>(n, n - dy);
      const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dx);
      const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(n, n - dx);
      for (std::ptrdiff_t r = r0; r < r1; ++r) {
        double* dst = din + (r + dy) * n + dx;
        const double* gr = g + r * n;
        for (std::ptrdiff_t c = c0; c < c1; ++c) dst[c] += w * gr[c];
      }
    }
  }
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Layout {
  std::size_t w1, b1, w2, b2;
};

Layout layout(const ModelArch& arch) {
  const auto c = static_cast<std::size_t>(arch.hidden_channels);
  return {0, 9 * c, 10 * c, 19 * c};
}

}  // namespace

double softplus(double z) noexcept {
  // log(1 + e^z) = max(z, 0) + log1p(e^-|z|)
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

TinyModel zero_model(const ModelArch& arch) {
  check_arch(arch);
  return TinyModel{arch, std::vector<double>(TinyModel::param_count_for(arch), 0.0)};
}

TinyModel init_model(const ModelArch& arch, std::uint64_t seed, double output_bias) {
  TinyModel m = zero_model(arch);
  SplitMix64 rng(seed);
  const Layout l = layout(arch);
  const auto c = static_cast<std::size_t>(arch.hidden_channels);
  const double bound1 = 1.0 / 3.0;  // fan-in 9
  const double bound2 = 1.0 / std::sqrt(9.0 * static_cast<double>(c));
  for (std::size_t i = 0; i < 9 * c; ++i) m.params[l.w1 + i] = rng.uniform(-bound1, bound1);
  for (std::size_t i = 0; i < 9 * c; ++i) m.params[l.w2 + i] = rng.uniform(-bound2, bound2);
  m.params[l.b2] = output_bias;
  return m;
}

ForwardTrace forward_traced(const TinyModel& model, const DensityMap& observation) {
  check_arch(model.arch);
  if (model.params.size() != model.param_count()) {
    throw InvalidArgument("model has " + std::to_string(model.params.size()) +
                          " parameters, architecture needs " +
                          std::to_string(model.param_count()));
  }
  if (observation.level() != model.arch.level) {
    throw InvalidArgument("observation level " + std::to_string(observation.level()) +
                          " does not match model level " + std::to_string(model.arch.level));
  }
  const Layout l = layout(model.arch);
  const auto channels = static_cast<std::size_t>(model.arch.hidden_channels);
  const std::size_t side = observation.side();
  const std::size_t cells = observation.size();
  const double* p = model.params.data();

  ForwardTrace t;
  t.input.assign(observation.values().begin(), observation.values().end());
  t.hidden.assign(channels * cells, 0.0);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    double* h = t.hidden.data() + ch * cells;
    conv3x3_accumulate(t.input.data(), p + l.w1 + 9 * ch, h, side);
    const double bias = p[l.b1 + ch];
    for (std::size_t i = 0; i < cells; ++i) h[i] = std::tanh(h[i] + bias);
  }
  t.preactivation.assign(cells, p[l.b2]);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    conv3x3_accumulate(t.hidden.data() + ch * cells, p + l.w2 + 9 * ch,
                       t.preactivation.data(), side);
  }
  std::vector<double> out(cells);
  for (std::size_t i = 0; i < cells; ++i) out[i] = softplus(t.preactivation[i]);
  t.output = DensityMap(model.arch.level, std::move(out));
  return t;
}

DensityMap forward(const TinyModel& model, const DensityMap& observation) {
  return forward_traced(model, observation).output;
}

void backward(const TinyModel& model, const ForwardTrace& trace,
              const DensityMap& output_grad, std::span<double> grad) {
  if (grad.size() != model.param_count()) throw InvalidArgument("backward: gradient size mismatch");
  if (output_grad.size() != trace.preactivation.size()) {
    throw InvalidArgument("backward: output gradient shape mismatch");
  }
  const Layout l = layout(model.arch);
  const auto channels = static_cast<std::size_t>(model.arch.hidden_channels);
  const std::size_t cells = trace.preactivation.size();
  const std::size_t side = std::size_t{1} << model.arch.level;
  const double* p = model.params.data();

  std::vector<double> dz(cells);
  auto gy = output_grad.values();
  double db2 = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    dz[i] = gy[i] * sigmoid(trace.preactivation[i]);
    db2 += dz[i];
  }
  grad[l.b2] += db2;

  std::vector<double> dh(cells);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    const double* h = trace.hidden.data() + ch * cells;
    conv3x3_kernel_grad(h, dz.data(), grad.data() + l.w2 + 9 * ch, side);
    std::fill(dh.begin(), dh.end(), 0.0);
    conv3x3_input_grad(dz.data(), p + l.w2 + 9 * ch, dh.data(), side);
    double db1 = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      dh[i] *= 1.0 - h[i] * h[i];
      db1 += dh[i];
    }
    grad[l.b1 + ch] += db1;
    conv3x3_kernel_grad(trace.input.data(), dh.data(), grad.data() + l.w1 + 9 * ch, side);
  }
}

}  // namespace pml
