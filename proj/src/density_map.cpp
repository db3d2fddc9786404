#include "pml/density_map.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "pml/errors.hpp"

namespace pml {

void check_level(int level, const char* what) {
  if (level < 0 || level > kMaxLevel) {
    throw InvalidArgument(std::string(what) + ": level " +
                          std::to_string(level) + " outside [0, " +
                          std::to_string(kMaxLevel) + "]");
  }
}

double pow4(int exponent) noexcept { return std::ldexp(1.0, 2 * exponent); }

DensityMap::DensityMap(int level) : level_(level) {
  check_level(level, "DensityMap");
  data_.assign(cell_count(level), 0.0);
}

DensityMap::DensityMap(int level, std::vector<double> data)
    : level_(level), data_(std::move(data)) {
  check_level(level, "DensityMap");
  if (data_.size() != cell_count(level)) {
    throw InvalidArgument("DensityMap: level " + std::to_string(level) +
                          " needs " + std::to_string(cell_count(level)) +
                          " values, got " + std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw InvalidArgument("DensityMap: non-finite value at index " +
                            std::to_string(i));
    }
  }
}

DensityMap DensityMap::filled(int level, double value) {
  check_level(level, "DensityMap::filled");
  return DensityMap(level, std::vector<double>(cell_count(level), value));
}

double DensityMap::sum() const noexcept {
  double total = 0.0;
  for (double v : data_) total += v;
  return total;
}

}  // namespace pml
