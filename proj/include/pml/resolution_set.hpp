#pragma once

#include <span>
#include <string>
#include <vector>

namespace pml {

/// Strictly increasing list of dyadic levels {n_0, ..., n_k, L}; the last
/// entry is the prediction level.
class ResolutionSet {
 public:
  /// Throws InvalidArgument unless `levels` is non-empty, non-negative and
  /// strictly increasing.
  explicit ResolutionSet(std::vector<int> levels);

  /// {0, 1, ..., n} ∪ {L}. Requires 0 <= n <= L.
  static ResolutionSet dense(int n, int prediction_level);

  std::span<const int> levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return levels_.size(); }
  int operator[](std::size_t i) const { return levels_[i]; }
  int prediction_level() const noexcept { return levels_.back(); }

  /// Measured sub-levels n_0..n_k (everything except the prediction level).
  std::span<const int> sub_levels() const noexcept {
    return std::span<const int>(levels_).first(levels_.size() - 1);
  }

  std::string to_string() const;

  friend bool operator==(const ResolutionSet&, const ResolutionSet&) = default;

 private:
  std::vector<int> levels_;
};

}  // namespace pml
