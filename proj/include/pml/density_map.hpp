#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pml {

/// Square dyadic grid of densities: side 2^level, row-major, (row, col) = (y, x).
///
/// Entries are finite. Non-negativity is a property of ground-truth maps only;
/// predictions, gradients and observations may go negative.
class DensityMap {
 public:
  /// Level-0 map holding a single zero.
  DensityMap() : DensityMap(0) {}

  /// All-zero map at `level`.
  explicit DensityMap(int level);

  /// Takes ownership of `data`; throws InvalidArgument when the length is not
  /// 4^level or an entry is not finite.
  DensityMap(int level, std::vector<double> data);

  static DensityMap filled(int level, double value);

  int level() const noexcept { return level_; }
  std::size_t side() const noexcept { return std::size_t{1} << level_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * side() + col];
  }
  std::span<const double> values() const noexcept { return data_; }

  /// Sequential left-to-right sum in storage order.
  double sum() const noexcept;

  friend bool operator==(const DensityMap&, const DensityMap&) = default;

 private:
  int level_;
  std::vector<double> data_;
};

/// Number of cells on a level-`level` grid, i.e. 4^level.
constexpr std::size_t cell_count(int level) noexcept {
  return std::size_t{1} << (2 * level);
}

/// 4^exponent as a double; negative exponents allowed.
double pow4(int exponent) noexcept;

/// Largest level supported by the grid types. 4^15 cells is already 8 GiB.
inline constexpr int kMaxLevel = 15;

void check_level(int level, const char* what);

}  // namespace pml
