#pragma once

// Norming constants, penultimate shapes and convergence diagnostics for
// maxima of Box-Cox transformed parent laws.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "evscale/boxcox.hpp"
#include "evscale/error.hpp"
#include "evscale/gev.hpp"
#include "evscale/parents.hpp"

namespace evscale {

/// b_n = F^-1(1 - 1/n), a_n = h(b_n), penultimate shape h'(b_n).
struct NormingTriple {
  double b = 0.0;
  double a = 1.0;
  double xi_pen = 0.0;
  double n = 1.0;
};

namespace detail {

// Solve survival(x) = tail_prob by bisection inside the support.
template <ParentLaw P>
double solve_upper_quantile(const P& d, double tail_prob) {
  double lo = d.lower_endpoint();
  double hi = d.upper_endpoint();
  if (!std::isfinite(lo)) {
    lo = std::isfinite(hi) ? hi - 1.0 : -1.0;
    for (int i = 0; i < 2100 && d.survival(lo) < tail_prob; ++i) lo = 2.0 * lo - 1.0;
  }
  if (!std::isfinite(hi)) {
    hi = std::max(lo, 0.0) + 1.0;
    for (int i = 0; i < 2100 && d.survival(hi) > tail_prob; ++i) hi = 2.0 * hi;
  }
  if (!(d.survival(lo) >= tail_prob) || !(d.survival(hi) <= tail_prob)) {
    throw NumericalError(concat("norming_constants: could not bracket 1-F(b) = ", tail_prob,
                                " for ", d.name(), " in [", lo, ", ", hi, "]"));
  }
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double s = d.survival(mid);
    if (s == tail_prob) return mid;
    (s > tail_prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Level b with 1 - F(b) = tail_prob, closed form where the family has one.
template <ParentLaw P>
double upper_quantile(const P& d, double tail_prob) {
  if (!(tail_prob > 0.0 && tail_prob < 1.0)) {
    throw DomainError(detail::concat("upper_quantile: tail probability ", tail_prob));
  }
  if constexpr (HasUpperQuantile<P>) {
    return d.upper_quantile(tail_prob);
  } else {
    return detail::solve_upper_quantile(d, tail_prob);
  }
}

/// Norming triple at block size n (n >= 2).
template <ParentLaw P>
NormingTriple norming_constants(const P& d, double n) {
  if (!(n >= 2.0)) throw DomainError(detail::concat("norming_constants: n = ", n, " < 2"));
  const double b = upper_quantile(d, 1.0 / n);
  const double residual = std::fabs(d.survival(b) - 1.0 / n);
  if (!(residual <= 1e-10)) {
    throw NumericalError(detail::concat("norming_constants: residual ", residual, " for ",
                                        d.name(), " at n = ", n));
  }
  return {b, d.reciprocal_hazard(b), d.reciprocal_hazard_derivative(b), n};
}

/// Y-scale norming after a Box-Cox transform:
///   b_Y = (b^lambda - 1)/lambda,  a_Y = a b^(lambda-1),
///   xi_Y = xi + (a/b)(lambda - 1).
inline NormingTriple transform_norming(const NormingTriple& t, double lambda) {
  if (!(t.b > 0.0)) {
    throw DomainError(detail::concat("transform_norming: b_X must be positive, got ", t.b));
  }
  return {boxcox(t.b, lambda), t.a * std::exp((lambda - 1.0) * std::log(t.b)),
          t.xi_pen + (t.a / t.b) * (lambda - 1.0), t.n};
}

template <ParentLaw P>
double penultimate_shape_y(const P& d, double n, double lambda) {
  return transform_norming(norming_constants(d, n), lambda).xi_pen;
}

/// Limiting Y shape xi_X + L (lambda - 1). Empty when the transformed law is
/// in no domain of attraction.
template <ParentLaw P>
std::optional<double> limiting_shape_y(const P& d, double lambda) {
  const TailLimits lim = d.tail_limits();
  if (lim.shape) {
    if (*lim.shape <= 0.0) return *lim.shape;
    if (!lim.ratio) return std::nullopt;
    return *lim.shape + *lim.ratio * (lambda - 1.0);
  }
  if (std::fabs(lambda) < kBoxCoxLogSwitch && lim.log_scale_shape) return *lim.log_scale_shape;
  return std::nullopt;
}

enum class LambdaStarStatus {
  ok,
  /// finite-level value of a sequence that has no limit
  no_limit,
  /// the transform cannot change the leading-order rate
  no_improvement,
};

struct LambdaStar {
  double value = 1.0;
  LambdaStarStatus status = LambdaStarStatus::ok;
};

/// lambda* = 1 - (h'(b) - xi)/(h(b)/b - L) from hazard values at level b.
inline LambdaStar lambda_star_from_hazard(double level, double h, double h_prime, double xi,
                                          double ratio_limit) {
  const double num = h_prime - xi;
  const double den = h / level - ratio_limit;
  const double scale = std::max({std::fabs(h_prime), std::fabs(xi), 1e-300});
  if (std::fabs(num) <= 1e-13 * scale) return {1.0, LambdaStarStatus::no_improvement};
  if (std::fabs(den) <= 1e-13 * std::max(std::fabs(h / level), 1e-300)) {
    return {std::numeric_limits<double>::quiet_NaN(), LambdaStarStatus::no_improvement};
  }
  return {1.0 - num / den, LambdaStarStatus::ok};
}

/// Optimal Box-Cox parameter at a caller-supplied level b.
template <ParentLaw P>
LambdaStar lambda_star_at_level(const P& d, double level) {
  const TailLimits lim = d.tail_limits();
  if (!lim.shape || !lim.ratio) {
    throw DomainError(detail::concat("lambda_star: ", d.name(),
                                     " has no limiting shape or h(x)/x limit"));
  }
  if (!(level > 0.0)) throw DomainError(detail::concat("lambda_star: level ", level));
  LambdaStar out = lambda_star_from_hazard(level, d.reciprocal_hazard(level),
                                           d.reciprocal_hazard_derivative(level), *lim.shape,
                                           *lim.ratio);
  if (out.status == LambdaStarStatus::ok && !lim.lambda_star_converges) {
    out.status = LambdaStarStatus::no_limit;
  }
  return out;
}

/// Optimal Box-Cox parameter at b = b_n.
template <ParentLaw P>
LambdaStar lambda_star_n(const P& d, double n) {
  return lambda_star_at_level(d, norming_constants(d, n).b);
}

/// Number of terms kept from the asymptotic Mills-ratio series when the
/// truncated normal hazard is expanded in powers of 1/x.
inline constexpr int kMillsSeriesTerms = 4;

/// Truncated Mills-ratio series for the normal reciprocal hazard:
///   h(x) ~ sum_k (-1)^k (2k-1)!! x^-(2k+1).
struct MillsSeries {
  int terms = kMillsSeriesTerms;

  double coefficient(int k) const {
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c *= -(2.0 * j - 1.0);
    return c;
  }
  double h(double x) const {
    double s = 0.0;
    for (int k = 0; k < terms; ++k) s += coefficient(k) * std::pow(x, -(2 * k + 1));
    return s;
  }
  double h_over_x(double x) const {
    double s = 0.0;
    for (int k = 0; k < terms; ++k) s += coefficient(k) * std::pow(x, -(2 * k + 2));
    return s;
  }
  double h_prime(double x) const {
    double s = 0.0;
    for (int k = 0; k < terms; ++k) s -= (2.0 * k + 1.0) * coefficient(k) * std::pow(x, -(2 * k + 2));
    return s;
  }
};

/// lambda* for the truncated normal using the truncated series for h/x and h'.
inline LambdaStar truncated_normal_series_lambda_star(double level,
                                                      int terms = kMillsSeriesTerms) {
  const MillsSeries series{terms};
  return lambda_star_from_hazard(level, series.h_over_x(level) * level, series.h_prime(level), 0.0,
                                 0.0);
}

/// Reciprocal hazard of Y = boxcox(X, lambda) at y = boxcox(x, lambda):
/// h_Y(y) = h_X(x) x^(lambda - 1).
template <ParentLaw P>
double transformed_reciprocal_hazard(const P& d, double x, double lambda) {
  return d.reciprocal_hazard(x) * std::exp((lambda - 1.0) * std::log(x));
}

/// dh_Y/dy = h_X'(x) + (lambda - 1) h_X(x)/x.
template <ParentLaw P>
double transformed_reciprocal_hazard_derivative(const P& d, double x, double lambda) {
  return d.reciprocal_hazard_derivative(x) + (lambda - 1.0) * d.reciprocal_hazard(x) / x;
}

/// Table-style limiting optimal lambda (empty where none exists).
template <ParentLaw P>
std::optional<double> table1_lambda_star(const P& d) {
  return d.table_lambda_star();
}

/// F_Y(y) = F_X(x(y)) for the Box-Cox transformed parent.
template <ParentLaw P>
double transformed_cdf(const P& d, double y, double lambda) {
  if (!in_boxcox_range(y, lambda)) return lambda > 0.0 ? 0.0 : 1.0;
  return 1.0 - d.survival(inverse_boxcox(y, lambda));
}

/// log F_Y(y), accurate in the upper tail.
template <ParentLaw P>
double transformed_log_cdf(const P& d, double y, double lambda) {
  if (!in_boxcox_range(y, lambda)) {
    return lambda > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  }
  return std::log1p(-d.survival(inverse_boxcox(y, lambda)));
}

/// Evenly spaced grid helper.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

/// Default grid for convergence_gap on the normalized scale.
inline std::vector<double> default_gap_grid() { return linspace(-3.0, 10.0, 2601); }

/// sup_x |{F_Y(a_Y x + b_Y)}^n - GEV(0,1,xi_Y,n)(x)| over the grid.
template <ParentLaw P>
double convergence_gap(const P& d, double n, double lambda, std::span<const double> grid) {
  const NormingTriple y = transform_norming(norming_constants(d, n), lambda);
  const GevParams limit{0.0, 1.0, y.xi_pen};
  double gap = 0.0;
  for (double x : grid) {
    const double log_f = transformed_log_cdf(d, y.a * x + y.b, lambda);
    const double fn = std::exp(n * log_f);
    gap = std::max(gap, std::fabs(fn - gev_cdf(x, limit)));
  }
  return gap;
}

}  // namespace evscale
