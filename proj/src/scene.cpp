#include "pml/scene.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "pml/errors.hpp"
#include "pml/io.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace fs = std::filesystem;

namespace {

constexpr int kMaxResample = 10000;

}  // namespace

void validate(const SceneConfig& cfg) {
  auto fail = [](const std::string& what) { throw InvalidArgument("SceneConfig: " + what); };
  if (!(cfg.scene_size > 0.0) || !std::isfinite(cfg.scene_size)) fail("scene_size must be > 0");
  if (cfg.num_clusters < 0) fail("num_clusters must be >= 0");
  if (cfg.points_min < 0 || cfg.points_max < cfg.points_min) {
    fail("points per cluster needs 0 <= min <= max");
  }
  if (!(cfg.cluster_spread > 0.0)) fail("cluster_spread must be > 0");
  if (!(cfg.blob_sigma > 0.0)) fail("blob_sigma must be > 0");
  if (!(cfg.noise_std >= 0.0)) fail("noise_std must be >= 0");
  check_level(cfg.obs_level, "SceneConfig.obs_level");
  check_level(cfg.gt_level, "SceneConfig.gt_level");
}

Scene generate_scene(const SceneConfig& cfg) {
  validate(cfg);
  SplitMix64 rng(cfg.seed);
  const double size = cfg.scene_size;

  PointAnnotations ann;
  ann.scene_size = size;
  for (int k = 0; k < cfg.num_clusters; ++k) {
    const double cx = rng.uniform(0.0, size);
    const double cy = rng.uniform(0.0, size);
    const auto count = rng.uniform_int(cfg.points_min, cfg.points_max);
    for (std::int64_t i = 0; i < count; ++i) {
      Point p;
      int tries = 0;
      do {
        if (++tries > kMaxResample) {
          throw InvalidArgument("SceneConfig: cluster_spread too large to keep points in the scene");
        }
        p.x = cx + cfg.cluster_spread * rng.normal();
        p.y = cy + cfg.cluster_spread * rng.normal();
      } while (!(p.x >= 0.0 && p.x < size && p.y >= 0.0 && p.y < size));
      ann.points.push_back(p);
    }
  }

  const std::size_t side = std::size_t{1} << cfg.obs_level;
  const double cell = size / static_cast<double>(side);
  const double two_var = 2.0 * cfg.blob_sigma * cfg.blob_sigma;
  // Unit-mass blob: density 1/(2 pi sigma^2) times the cell area.
  const double amp = cell * cell / (std::numbers::pi * two_var);
  const double reach = 4.0 * cfg.blob_sigma;
  std::vector<double> obs(side * side, 0.0);
  auto cell_range = [&](double centre) {
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((centre - reach) / cell));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor((centre + reach) / cell));
    const auto last = static_cast<std::ptrdiff_t>(side) - 1;
    return std::pair{std::max<std::ptrdiff_t>(lo, 0), std::min(hi, last)};
  };
  for (const Point& p : ann.points) {
    auto [r0, r1] = cell_range(p.y);
    auto [c0, c1] = cell_range(p.x);
    for (auto r = r0; r <= r1; ++r) {
      const double dy = (static_cast<double>(r) + 0.5) * cell - p.y;
      for (auto c = c0; c <= c1; ++c) {
        const double dx = (static_cast<double>(c) + 0.5) * cell - p.x;
        obs[static_cast<std::size_t>(r) * side + static_cast<std::size_t>(c)] +=
            amp * std::exp(-(dx * dx + dy * dy) / two_var);
      }
    }
  }
  if (cfg.noise_std > 0.0) {
    for (double& v : obs) v += cfg.noise_std * rng.normal();
  }

  Scene s;
  s.config = cfg;
  s.gt_map = rasterize(ann, cfg.gt_level);
  s.annotations = std::move(ann);
  s.observation = DensityMap(cfg.obs_level, std::move(obs));
  return s;
}

std::string manifest_line(const SceneConfig& cfg) {
  std::ostringstream os;
  os << "seed=" << cfg.seed << " scene_size=" << io::format_double(cfg.scene_size)
     << " num_clusters=" << cfg.num_clusters << " points_min=" << cfg.points_min
     << " points_max=" << cfg.points_max
     << " cluster_spread=" << io::format_double(cfg.cluster_spread)
     << " blob_sigma=" << io::format_double(cfg.blob_sigma)
     << " noise_std=" << io::format_double(cfg.noise_std) << " obs_level=" << cfg.obs_level
     << " gt_level=" << cfg.gt_level;
  return os.str();
}

SceneConfig parse_manifest_line(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError(1, "manifest token without '=': " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(1, std::string("manifest is missing ") + key);
    return it->second;
  };
  SceneConfig cfg;
  try {
    cfg.seed = std::stoull(get("seed"));
    cfg.scene_size = std::stod(get("scene_size"));
    cfg.num_clusters = std::stoi(get("num_clusters"));
    cfg.points_min = std::stoi(get("points_min"));
    cfg.points_max = std::stoi(get("points_max"));
    cfg.cluster_spread = std::stod(get("cluster_spread"));
    cfg.blob_sigma = std::stod(get("blob_sigma"));
    cfg.noise_std = std::stod(get("noise_std"));
    cfg.obs_level = std::stoi(get("obs_level"));
    cfg.gt_level = std::stoi(get("gt_level"));
  } catch (const std::logic_error& e) {
    throw ParseError(1, std::string("bad manifest value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

void write_scene(const fs::path& dir, const Scene& scene) {
  fs::create_directories(dir);
  {
    std::ofstream m(dir / "manifest.txt");
    if (!m) throw Error("cannot write " + (dir / "manifest.txt").string());
    m << manifest_line(scene.config) << '\n';
  }
  io::write_points_csv(dir / "points.csv", scene.annotations.points);
  io::write_dmap(dir / "observation.dmap", scene.observation);
  io::write_dmap(dir / "gt.dmap", scene.gt_map);
}

Scene read_scene(const fs::path& dir) {
  std::ifstream m(dir / "manifest.txt");
  if (!m) throw Error("cannot read " + (dir / "manifest.txt").string());
  std::string line;
  std::getline(m, line);
  Scene s;
  s.config = parse_manifest_line(line);
  s.annotations.scene_size = s.config.scene_size;
  s.annotations.points = io::read_points_csv(dir / "points.csv");
  validate(s.annotations);
  s.observation = io::read_dmap(dir / "observation.dmap");
  s.gt_map = io::read_dmap(dir / "gt.dmap");
  return s;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fingerprint(const Scene& scene) {
  const std::string manifest = manifest_line(scene.config);
  std::uint64_t h = fnv1a(manifest.data(), manifest.size());
  for (const Point& p : scene.annotations.points) {
    h = fnv1a(&p.x, sizeof p.x, h);
    h = fnv1a(&p.y, sizeof p.y, h);
  }
  auto obs = scene.observation.values();
  h = fnv1a(obs.data(), obs.size_bytes(), h);
  auto gt = scene.gt_map.values();
  return fnv1a(gt.data(), gt.size_bytes(), h);
}

}  // namespace pml
