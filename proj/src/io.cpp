#include "pml/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pml/errors.hpp"

namespace pml::io {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

// strtod rather than from_chars: libstdc++ 11 lacks floating from_chars on
// some targets and strtod accepts the same decimal grammar we write.
bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  std::string buf(token);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(v)) {
    return false;
  }
  out = v;
  return true;
}

bool parse_size(std::string_view token, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DensityMap read_dmap(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(1, "missing '<rows> <cols>' header");
  ++line_no;
  auto header = split_ws(trim(line));
  std::size_t rows = 0;
  std::size_t cols = 0;
  if (header.size() != 2 || !parse_size(header[0], rows) ||
      !parse_size(header[1], cols)) {
    throw ParseError(line_no, "expected '<rows> <cols>', got '" + line + "'");
  }
  if (rows != cols) {
    throw ParseError(line_no, "map must be square, got " + std::to_string(rows) +
                                  "x" + std::to_string(cols));
  }
  if (rows == 0 || (rows & (rows - 1)) != 0) {
    throw ParseError(line_no, "side " + std::to_string(rows) +
                                  " is not a power of two");
  }
  int level = 0;
  while ((std::size_t{1} << level) < rows) ++level;
  if (level > kMaxLevel) throw ParseError(line_no, "map too large");

  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw ParseError(line_no + 1, "expected " + std::to_string(rows) +
                                        " data rows, found " + std::to_string(r));
    }
    ++line_no;
    auto tokens = split_ws(trim(line));
    if (tokens.size() != cols) {
      throw ParseError(line_no, "expected " + std::to_string(cols) +
                                    " values, found " +
                                    std::to_string(tokens.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_double(tokens[c], v)) {
        throw ParseError(line_no, "bad number '" + std::string(tokens[c]) +
                                      "' in column " + std::to_string(c + 1));
      }
      data.push_back(v);
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) throw ParseError(line_no, "trailing data after matrix");
  }
  return DensityMap(level, std::move(data));
}

DensityMap read_dmap(const fs::path& path) {
  auto in = open_in(path);
  try {
    return read_dmap(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e);
  }
}

void write_dmap(std::ostream& out, const DensityMap& m) {
  const std::size_t side = m.side();
  out << side << ' ' << side << '\n';
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_dmap(const fs::path& path, const DensityMap& m) {
  auto out = open_out(path);
  write_dmap(out, m);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<Point> read_points_csv(std::istream& in) {
  std::vector<Point> points;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    if (!seen_content) {
      seen_content = true;
      std::string lowered(t);
      lowered.erase(std::remove(lowered.begin(), lowered.end(), ' '), lowered.end());
      if (lowered == "x,y") continue;
    }
    auto comma = t.find(',');
    if (comma == std::string_view::npos || t.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(line_no, "expected 'x,y', got '" + std::string(t) + "'");
    }
    Point p;
    if (!parse_double(trim(t.substr(0, comma)), p.x) ||
        !parse_double(trim(t.substr(comma + 1)), p.y)) {
      throw ParseError(line_no, "bad coordinate in '" + std::string(t) + "'");
    }
    points.push_back(p);
  }
  return points;
}

std::vector<Point> read_points_csv(const fs::path& path) {
  auto in = open_in(path);
  try {
    return read_points_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e);
  }
}

void write_points_csv(std::ostream& out, const std::vector<Point>& points) {
  out << "x,y\n";
  for (const Point& p : points) {
    out << format_double(p.x) << ',' << format_double(p.y) << '\n';
  }
}

void write_points_csv(const fs::path& path, const std::vector<Point>& points) {
  auto out = open_out(path);
  write_points_csv(out, points);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<fs::path> collect_dmaps(const fs::path& p) {
  if (fs::is_regular_file(p)) return {p};
  if (!fs::is_directory(p)) throw Error("no such file or directory: " + p.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(p)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dmap") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  if (out.empty()) throw Error("no .dmap files in " + p.string());
  return out;
}

}  // namespace pml::io
