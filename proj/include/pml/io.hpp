#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pml/density_map.hpp"
#include "pml/pyramid.hpp"

namespace pml::io {

/// Shortest-round-trip-safe decimal form: 17 significant digits.
std::string format_double(double v);

/// ".dmap" text matrix: first line "<rows> <cols>", then `rows` lines of
/// `cols` space-separated decimals. rows == cols == 2^level is required.
/// Throws ParseError with the offending 1-based line number.
DensityMap read_dmap(std::istream& in);
DensityMap read_dmap(const std::filesystem::path& path);
void write_dmap(std::ostream& out, const DensityMap& m);
void write_dmap(const std::filesystem::path& path, const DensityMap& m);

/// One "x,y" pair per line, optional "x,y" header, blank lines skipped.
/// Bounds are not checked here; rasterize() validates against the scene.
std::vector<Point> read_points_csv(std::istream& in);
std::vector<Point> read_points_csv(const std::filesystem::path& path);
void write_points_csv(std::ostream& out, const std::vector<Point>& points);
void write_points_csv(const std::filesystem::path& path,
                      const std::vector<Point>& points);

/// Either a single .dmap file, or every *.dmap inside a directory sorted by
/// file name.
std::vector<std::filesystem::path> collect_dmaps(const std::filesystem::path& p);

}  // namespace pml::io
