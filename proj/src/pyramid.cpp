#include "pml/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "pml/errors.hpp"

namespace pml {

namespace {

// Block-sums `src` (side 2^from) down to side 2^to.
std::vector<double> block_sum(std::span<const double> src, int from, int to) {
  const std::size_t src_side = std::size_t{1} << from;
  const std::size_t dst_side = std::size_t{1} << to;
  const std::size_t block = src_side / dst_side;
  std::vector<double> out(dst_side * dst_side, 0.0);
  for (std::size_t r = 0; r < dst_side; ++r) {
    for (std::size_t c = 0; c < dst_side; ++c) {
      double acc = 0.0;
      for (std::size_t br = 0; br < block; ++br) {
        const double* row = src.data() + (r * block + br) * src_side + c * block;
        for (std::size_t bc = 0; bc < block; ++bc) acc += row[bc];
      }
      out[r * dst_side + c] = acc;
    }
  }
  return out;
}

void check_coarsening(const DensityMap& m, int target_level, const char* op) {
  if (target_level < 0 || target_level > m.level()) {
    throw InvalidArgument(std::string(op) + ": target level " +
                          std::to_string(target_level) +
                          " must lie in [0, " + std::to_string(m.level()) +
                          "]");
  }
}

}  // namespace

ResolutionSet::ResolutionSet(std::vector<int> levels)
    : levels_(std::move(levels)) {
  if (levels_.empty()) throw InvalidArgument("ResolutionSet: empty");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    check_level(levels_[i], "ResolutionSet");
    if (i > 0 && levels_[i] <= levels_[i - 1]) {
      throw InvalidArgument("ResolutionSet: levels must be strictly increasing, got " +
                            to_string());
    }
  }
}

ResolutionSet ResolutionSet::dense(int n, int prediction_level) {
  if (n < 0 || n > prediction_level) {
    throw InvalidArgument("ResolutionSet::dense: need 0 <= n <= L, got n=" +
                          std::to_string(n) +
                          " L=" + std::to_string(prediction_level));
  }
  std::vector<int> levels;
  for (int i = 0; i <= n; ++i) levels.push_back(i);
  if (n < prediction_level) levels.push_back(prediction_level);
  return ResolutionSet(std::move(levels));
}

std::string ResolutionSet::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (i) os << ',';
    os << levels_[i];
  }
  os << '}';
  return os.str();
}

void validate(const PointAnnotations& ann) {
  if (!(ann.scene_size > 0.0) || !std::isfinite(ann.scene_size)) {
    throw InvalidArgument("scene size must be positive and finite");
  }
  for (std::size_t i = 0; i < ann.points.size(); ++i) {
    const Point& p = ann.points[i];
    const bool inside = p.x >= 0.0 && p.x < ann.scene_size && p.y >= 0.0 &&
                        p.y < ann.scene_size;
    if (!inside) {
      std::ostringstream os;
      os.precision(17);
      os << "point " << i << " (" << p.x << ", " << p.y
         << ") lies outside [0, " << ann.scene_size << ")^2";
      throw BoundsError(i, os.str());
    }
  }
}

DensityMap rasterize(const PointAnnotations& ann, int level) {
  check_level(level, "rasterize");
  validate(ann);
  const std::size_t side = std::size_t{1} << level;
  const double cells = static_cast<double>(side);
  std::vector<double> counts(side * side, 0.0);
  for (const Point& p : ann.points) {
    // Multiply by the power of two first: a point exactly on a grid line then
    // maps to an exact integer. The min() catches x just below scene_size
    // rounding up to `side`.
    auto cell = [&](double v) {
      auto i = static_cast<std::size_t>(std::floor(v * cells / ann.scene_size));
      return std::min(i, side - 1);
    };
    const std::size_t col = cell(p.x);
    const std::size_t row = cell(p.y);
    counts[row * side + col] += 1.0;
  }
  return DensityMap(level, std::move(counts));
}

DensityMap downsample_sum(const DensityMap& m, int target_level) {
  check_coarsening(m, target_level, "downsample_sum");
  if (target_level == m.level()) return m;
  return DensityMap(target_level, block_sum(m.values(), m.level(), target_level));
}

DensityMap downsample_avg(const DensityMap& m, int target_level) {
  check_coarsening(m, target_level, "downsample_avg");
  if (target_level == m.level()) return m;
  auto out = block_sum(m.values(), m.level(), target_level);
  const double scale = pow4(target_level - m.level());
  for (double& v : out) v *= scale;
  return DensityMap(target_level, std::move(out));
}

DensityMap upsample_replicate(const DensityMap& m, int target_level) {
  check_level(target_level, "upsample_replicate");
  if (target_level < m.level()) {
    throw InvalidArgument("upsample_replicate: target level " +
                          std::to_string(target_level) + " below source level " +
                          std::to_string(m.level()));
  }
  if (target_level == m.level()) return m;
  const std::size_t src_side = m.side();
  const std::size_t dst_side = std::size_t{1} << target_level;
  const std::size_t block = dst_side / src_side;
  std::vector<double> out(dst_side * dst_side);
  for (std::size_t r = 0; r < dst_side; ++r) {
    for (std::size_t c = 0; c < dst_side; ++c) {
      out[r * dst_side + c] = m(r / block, c / block);
    }
  }
  return DensityMap(target_level, std::move(out));
}

ResidualMap residual(const DensityMap& fine, const DensityMap& coarse) {
  if (coarse.level() >= fine.level()) {
    throw InvalidArgument("residual: coarse level " +
                          std::to_string(coarse.level()) +
                          " must be below fine level " +
                          std::to_string(fine.level()));
  }
  const DensityMap spread = upsample_replicate(coarse, fine.level());
  const double scale = pow4(coarse.level() - fine.level());
  ResidualMap r{coarse.level(), fine.level(), std::vector<double>(fine.size())};
  auto f = fine.values();
  auto s = spread.values();
  for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = f[i] - scale * s[i];
  return r;
}

std::vector<double> downsample_avg(const ResidualMap& r, int target_level) {
  if (target_level < 0 || target_level > r.fine_level) {
    throw InvalidArgument("downsample_avg(residual): bad target level " +
                          std::to_string(target_level));
  }
  auto out = block_sum(r.data, r.fine_level, target_level);
  const double scale = pow4(target_level - r.fine_level);
  for (double& v : out) v *= scale;
  return out;
}

Pyramid build_pyramid(const DensityMap& m, const ResolutionSet& levels) {
  if (levels.prediction_level() > m.level()) {
    throw InvalidArgument("build_pyramid: level " +
                          std::to_string(levels.prediction_level()) +
                          " exceeds map level " + std::to_string(m.level()));
  }
  Pyramid p;
  p.levels.assign(levels.levels().begin(), levels.levels().end());
  p.maps.reserve(levels.size());
  // Coarsen from the finest requested level downwards so each level is built
  // from the previous one with a small block.
  std::vector<DensityMap> rev;
  DensityMap current = m;
  for (auto it = p.levels.rbegin(); it != p.levels.rend(); ++it) {
    current = downsample_sum(current, *it);
    rev.push_back(current);
  }
  p.maps.assign(rev.rbegin(), rev.rend());
  return p;
}

double dot(const DensityMap& a, const DensityMap& b) {
  if (a.level() != b.level()) throw InvalidArgument("dot: level mismatch");
  auto x = a.values();
  auto y = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace pml
