#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pml/density_map.hpp"
#include "pml/pyramid.hpp"

namespace pml {

/// Synthetic crowd scene generator settings. Identical configs give
/// bit-identical scenes.
struct SceneConfig {
  std::uint64_t seed = 0;
  double scene_size = 64.0;
  int num_clusters = 4;
  int points_min = 2;   // per cluster, inclusive
  int points_max = 40;  // per cluster, inclusive
  double cluster_spread = 4.0;  // std of points around a center, scene units
  double blob_sigma = 1.0;      // observation blur, scene units
  double noise_std = 0.002;
  int obs_level = 6;
  int gt_level = 6;  // L
};

/// Throws InvalidArgument on a bad configuration.
void validate(const SceneConfig& cfg);

struct Scene {
  SceneConfig config;
  PointAnnotations annotations;
  DensityMap observation;  // blurred point field plus noise; may be negative
  DensityMap gt_map;       // rasterize(annotations, gt_level)
};

/// Cluster centers uniform in the scene, per-cluster counts uniform in
/// [points_min, points_max], points Gaussian around their center (out-of-scene
/// draws are resampled). The observation sums unit-mass Gaussian blobs sampled
/// at cell centers (cut off at 4 sigma) plus i.i.d. Gaussian noise.
Scene generate_scene(const SceneConfig& cfg);

/// One-line "key=value ..." record of every config field.
std::string manifest_line(const SceneConfig& cfg);
SceneConfig parse_manifest_line(const std::string& line);

/// Writes manifest.txt, points.csv, observation.dmap and gt.dmap into `dir`
/// (created if missing).
void write_scene(const std::filesystem::path& dir, const Scene& scene);
Scene read_scene(const std::filesystem::path& dir);

/// FNV-1a over the config and the raw bits of points and maps. Equal scenes
/// give equal fingerprints; used to compare scene streams.
std::uint64_t fingerprint(const Scene& scene);
std::uint64_t fnv1a(const void* data, std::size_t bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace pml
