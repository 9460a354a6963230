#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvcn {

/// Runtime failure inside the library (bad data, degenerate estimates, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments supplied by a caller; the CLI maps these to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Selects between the OpenMP kernels and the serial reference loops.
/// Both paths produce bitwise identical output.
enum class ExecPolicy { serial, parallel };

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Unordered node pair stored with i > l (0-based node indices).
struct Pair {
  std::size_t i = 0;
  std::size_t l = 0;
  bool operator==(const Pair&) const = default;
};

/// Number of hypotheses p(p-1)/2.
constexpr std::size_t pair_count(std::size_t p) { return p * (p - 1) / 2; }

/// Position of (i, l), i > l, in the hypothesis ordering (1,0), (2,0), (2,1), (3,0), ...
constexpr std::size_t hypothesis_index(std::size_t i, std::size_t l) {
  return i > l ? i * (i - 1) / 2 + l : l * (l - 1) / 2 + i;
}

/// Position of (i, l), i >= l, in the lower triangle including the diagonal.
constexpr std::size_t lower_index(std::size_t i, std::size_t l) {
  return i >= l ? i * (i + 1) / 2 + l : l * (l + 1) / 2 + i;
}

std::vector<Pair> hypothesis_pairs(std::size_t p);

/// Grid time t_j = j / n for the 1-based observation index j.
inline double grid_time(std::size_t j, std::size_t n) {
  return static_cast<double>(j) / static_cast<double>(n);
}

/// Closed range [first, last] of 1-based grid indices.
struct IndexRange {
  std::size_t first = 1;
  std::size_t last = 0;
  std::size_t size() const { return last >= first ? last - first + 1 : 0; }
  bool contains(std::size_t j) const { return j >= first && j <= last; }
  bool operator==(const IndexRange&) const = default;
};

}  // namespace tvcn
