#pragma once

#include <utility>
#include <vector>

#include "pml/density_map.hpp"
#include "pml/resolution_set.hpp"

namespace pml {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Point annotations inside the square scene [0, scene_size)^2.
struct PointAnnotations {
  std::vector<Point> points;
  double scene_size = 1.0;
};

/// Throws BoundsError naming the first point outside the scene, or
/// InvalidArgument for a non-positive scene size.
void validate(const PointAnnotations& ann);

/// Difference between a fine map and the uniformly spread coarse map.
struct ResidualMap {
  int coarse_level = 0;
  int fine_level = 1;
  std::vector<double> data;  // 4^fine_level entries, row-major
};

/// Ordered stack of sum-pooled maps, one per level of a ResolutionSet.
struct Pyramid {
  std::vector<int> levels;
  std::vector<DensityMap> maps;
};

/// Per-cell point counts on the uniform 2^level partition. Cells are
/// half-open, so a point on an interior grid line goes to the higher index.
DensityMap rasterize(const PointAnnotations& ann, int level);

/// Each output cell is the sum of its source block.
DensityMap downsample_sum(const DensityMap& m, int target_level);

/// Each output cell is the mean of its source block.
DensityMap downsample_avg(const DensityMap& m, int target_level);

/// Copies each cell into its 4^(target_level - level) descendants.
DensityMap upsample_replicate(const DensityMap& m, int target_level);

/// fine - 4^(coarse.level - fine.level) * upsample_replicate(coarse, fine.level)
ResidualMap residual(const DensityMap& fine, const DensityMap& coarse);

/// Average-downsamples a residual to `target_level` (used for the zero-mean
/// prior check).
std::vector<double> downsample_avg(const ResidualMap& r, int target_level);

Pyramid build_pyramid(const DensityMap& m, const ResolutionSet& levels);

/// Sequential dot product; both maps must share a level.
double dot(const DensityMap& a, const DensityMap& b);

}  // namespace pml
