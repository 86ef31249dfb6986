#pragma once

#include <cmath>
#include <span>

#include "evscale/error.hpp"

namespace evscale {

/// |lambda| below this uses the logarithmic branch of the Box-Cox map.
inline constexpr double kBoxCoxLogSwitch = 1e-8;

/// y = (x^lambda - 1)/lambda, or log x at lambda = 0.
inline double boxcox(double x, double lambda) {
  if (!(x > 0.0)) {
    throw DomainError(detail::concat("boxcox: x must be positive, got ", x));
  }
  if (lambda == 1.0) return x - 1.0;
  const double lx = std::log(x);
  if (std::fabs(lambda) < kBoxCoxLogSwitch) {
    // second-order term keeps the map smooth across the switch
    return lx * (1.0 + 0.5 * lambda * lx);
  }
  return std::expm1(lambda * lx) / lambda;
}

/// x = (lambda*y + 1)^(1/lambda), or exp(y) at lambda = 0.
inline double inverse_boxcox(double y, double lambda) {
  if (lambda == 1.0) {
    if (!(y > -1.0)) {
      throw DomainError(detail::concat("inverse_boxcox: y = ", y, " is below -1 for lambda = 1"));
    }
    return y + 1.0;
  }
  if (std::fabs(lambda) < kBoxCoxLogSwitch) {
    return std::exp(y * (1.0 - 0.5 * lambda * y));
  }
  const double base = lambda * y + 1.0;
  if (!(base > 0.0)) {
    throw DomainError(detail::concat("inverse_boxcox: lambda*y + 1 = ", base,
                                     " is not positive (y=", y, ", lambda=", lambda,
                                     ")"));
  }
  return std::exp(std::log1p(lambda * y) / lambda);
}

/// Whether y lies inside the image of (0, inf) under the Box-Cox map.
inline bool in_boxcox_range(double y, double lambda) {
  if (std::fabs(lambda) < kBoxCoxLogSwitch) return std::isfinite(y);
  return lambda * y + 1.0 > 0.0;
}

/// Sum of log|dy/dx| = (lambda - 1) * sum(log x).
inline double boxcox_log_jacobian(std::span<const double> x, double lambda) {
  double s = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) {
      throw DomainError(detail::concat("boxcox: data must be positive, got ", v));
    }
    s += std::log(v);
  }
  return (lambda - 1.0) * s;
}

}  // namespace evscale
