#include "tvcn/kernel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "tvcn/common.hpp"

namespace tvcn {

namespace {

template <class F>
double integrate(F f) {
  return boost::math::quadrature::gauss<double, 30>::integrate(f, -1.0, 1.0);
}

double fourth_order_shape(double u) {
  const double u2 = u * u;
  return 15.0 / 32.0 * (3.0 - 10.0 * u2 + 7.0 * u2 * u2);
}

}  // namespace

Kernel::Kernel(std::string name, Shape shape) : name_(std::move(name)), shape_(shape) {
  mass_ = integrate([this](double u) { return (*this)(u); });
  second_moment_ = integrate([this](double u) { return u * u * (*this)(u); });
  kappa_ = integrate([this](double u) {
    const double k = (*this)(u);
    return k * k;
  });
  if (std::abs(mass_ - 1.0) > 1e-10 || std::abs(second_moment_) > 1e-10) {
    throw UsageError(fmt::format("kernel '{}' fails the moment conditions (mass {}, u^2 moment {})",
                                 name_, mass_, second_moment_));
  }
}

const Kernel& fourth_order_epanechnikov() {
  static const Kernel kernel("epanechnikov4", &fourth_order_shape);
  return kernel;
}

}  // namespace tvcn
