#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>
#include <filesystem>
#include <random>
#include <string>

#include "tvcn/common.hpp"
#include "tvcn/panel.hpp"

namespace tvcn::test {

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(gen);
  return m;
}

/// Gaussian draws rounded to multiples of 2^-20. Adding a small dyadic
/// constant to such values is exact, so shift checks can demand equal bits.
inline Matrix dyadic_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m = gaussian_matrix(rows, cols, seed);
  for (double& v : m.data()) v = std::ldexp(std::round(std::ldexp(v, 20)), -20);
  return m;
}

/// Bitwise equality, so that NaN padding compares equal to itself.
inline bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

inline bool same_bits(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

inline TimeSeriesPanel gaussian_panel(std::size_t n, std::size_t p, std::uint64_t seed) {
  return TimeSeriesPanel(gaussian_matrix(n, p, seed));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tvcn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tvcn::test
