#pragma once

#include <cmath>
#include <string>

namespace tvcn {

/// Symmetric smoothing kernel supported on [-1, 1].
///
/// Construction integrates the kernel once and rejects shapes that do not
/// satisfy the moment conditions the estimators rely on:
/// int K = 1 and int u^2 K = 0 (to 1e-10). The squared-kernel integral
/// kappa = int K^2 is cached for the long-run variance estimator.
class Kernel {
 public:
  using Shape = double (*)(double);

  Kernel(std::string name, Shape shape);

  double operator()(double u) const { return std::abs(u) > 1.0 ? 0.0 : shape_(u); }

  /// K_b(x) = K(x / b).
  double scaled(double x, double b) const { return (*this)(x / b); }

  const std::string& name() const { return name_; }
  double mass() const { return mass_; }
  double second_moment() const { return second_moment_; }
  double kappa() const { return kappa_; }

 private:
  std::string name_;
  Shape shape_;
  double mass_ = 0.0;
  double second_moment_ = 0.0;
  double kappa_ = 0.0;
};

/// K(u) = (15/32)(3 - 10u^2 + 7u^4) on |u| <= 1; kappa = 5/4.
const Kernel& fourth_order_epanechnikov();

}  // namespace tvcn
