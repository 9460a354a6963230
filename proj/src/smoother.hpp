#pragma once

// Grid smoother shared by the field estimator and GCV bandwidth selection.

#include <span>

#include "tvcn/common.hpp"
#include "tvcn/kernel.hpp"

namespace tvcn::detail {

enum class FitKind { local_linear, local_constant };

struct GridFit {
  double level = 0.0;
  double self_weight = 0.0;  // weight of z_j in the fit at t_j (hat-matrix diagonal)
};

/// Smooths the series z (z[0] observed at 1-based index `first`, last at n)
/// at grid index j with bandwidth b.
GridFit fit_on_grid(std::span<const double> z, std::size_t first, std::size_t n, std::size_t j,
                    double b, const Kernel& kernel, FitKind kind);

}  // namespace tvcn::detail
