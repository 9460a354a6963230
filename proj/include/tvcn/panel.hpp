#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tvcn/common.hpp"

namespace tvcn {

// Storage is 0-based: row r holds the observation at time index j = r + 1,
// time t_j = j / n.

/// Multivariate series Y_{j,i} observed on the grid t_j = j/n.
/// Immutable once constructed; the constructor enforces finiteness, n >= 20,
/// p >= 2 and unique labels.
class TimeSeriesPanel {
 public:
  TimeSeriesPanel(Matrix values, std::vector<std::string> labels);

  /// Labels default to x1..xp.
  explicit TimeSeriesPanel(Matrix values);

  std::size_t n() const { return values_.rows(); }
  std::size_t p() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Observation at 1-based time index j, 0-based column i.
  double at(std::size_t j, std::size_t i) const { return values_(j - 1, i); }

  bool operator==(const TimeSeriesPanel&) const = default;

 private:
  Matrix values_;
  std::vector<std::string> labels_;
};

/// Lag-h differences y_{j,i} = Y_{j,i} - Y_{j-h,i} for j = h+1..n.
class DifferencedPanel {
 public:
  DifferencedPanel(std::size_t lag, std::size_t parent_n, Matrix diffs);

  std::size_t lag() const { return lag_; }
  std::size_t n() const { return parent_n_; }
  std::size_t p() const { return diffs_.cols(); }
  const Matrix& diffs() const { return diffs_; }

  /// First 1-based time index that carries a difference (h + 1).
  std::size_t first_index() const { return lag_ + 1; }

  /// y_{j,i} for 1-based j in [h+1, n].
  double at(std::size_t j, std::size_t i) const { return diffs_(j - lag_ - 1, i); }

 private:
  std::size_t lag_;
  std::size_t parent_n_;
  Matrix diffs_;
};

/// Reads a comma-separated panel; rows are time points in order.
TimeSeriesPanel load_csv(const std::filesystem::path& path, bool has_header);

/// Writes the panel with a header row, using round-trip precision.
void write_csv(const TimeSeriesPanel& panel, const std::filesystem::path& path);

/// Requires 1 <= h < n/4.
DifferencedPanel difference(const TimeSeriesPanel& panel, std::size_t h);

/// Row j of the result concatenates (Y_j, Y_{j+1}, ..., Y_{j+K}); requires K < n/10.
/// Labels are suffixed with "_lag<k>" when K > 0.
TimeSeriesPanel stack_lags(const TimeSeriesPanel& panel, std::size_t K);

}  // namespace tvcn
