#pragma once

#include <cmath>
#include <limits>

#include "evscale/error.hpp"

namespace evscale {

/// |shape| below this is evaluated through the Gumbel (xi -> 0) forms.
inline constexpr double kGumbelSwitch = 1e-8;

/// GEV(location, scale, shape). Also used for the three parameters of a
/// Poisson-process model, where location/scale/shape are (beta, alpha, gamma).
struct GevParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  bool valid() const {
    return std::isfinite(location) && std::isfinite(shape) && scale > 0.0 &&
           std::isfinite(scale);
  }
  friend bool operator==(const GevParams&, const GevParams&) = default;
};

inline void require_valid(const GevParams& p, const char* where) {
  if (!p.valid()) {
    throw DomainError(detail::concat(where, ": invalid GEV parameters (", p.location, ", ",
                                     p.scale, ", ", p.shape, ")"));
  }
}

namespace detail {

inline bool is_gumbel(double shape) { return std::fabs(shape) < kGumbelSwitch; }

// -log of the GEV survival-type term, i.e. log(t) with t = [1 + xi*s]^(-1/xi).
// Returns +inf/-inf when s sits outside the support on the respective side.
inline double log_tail_term(double s, double shape) {
  if (is_gumbel(shape)) return -s;
  const double z = shape * s;
  if (!(z > -1.0)) {
    return shape > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
  }
  return -std::log1p(z) / shape;
}

}  // namespace detail

/// exp{-[1 + xi(x - mu)/sigma]_+^(-1/xi)}
inline double gev_cdf(double x, const GevParams& p) {
  const double s = (x - p.location) / p.scale;
  const double lt = detail::log_tail_term(s, p.shape);
  if (lt == std::numeric_limits<double>::infinity()) return 0.0;
  if (lt == -std::numeric_limits<double>::infinity()) return 1.0;
  return std::exp(-std::exp(lt));
}

/// 1 - cdf, accurate in the upper tail.
inline double gev_survival(double x, const GevParams& p) {
  const double s = (x - p.location) / p.scale;
  const double lt = detail::log_tail_term(s, p.shape);
  if (lt == std::numeric_limits<double>::infinity()) return 1.0;
  if (lt == -std::numeric_limits<double>::infinity()) return 0.0;
  return -std::expm1(-std::exp(lt));
}

/// log density; -inf outside the support.
inline double gev_logpdf(double x, const GevParams& p) {
  const double s = (x - p.location) / p.scale;
  if (detail::is_gumbel(p.shape)) return -std::log(p.scale) - s - std::exp(-s);
  const double z = p.shape * s;
  if (!(z > -1.0)) return -std::numeric_limits<double>::infinity();
  const double l1 = std::log1p(z);
  return -std::log(p.scale) - (1.0 + 1.0 / p.shape) * l1 - std::exp(-l1 / p.shape);
}

/// Quantile function; q must lie in (0, 1).
inline double gev_quantile(double q, const GevParams& p) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError(detail::concat("gev_quantile: probability ", q, " outside (0,1)"));
  }
  const double ly = std::log(-std::log(q));  // log(-log q)
  if (detail::is_gumbel(p.shape)) return p.location - p.scale * ly;
  return p.location + p.scale * std::expm1(-p.shape * ly) / p.shape;
}

/// Upper end point mu - sigma/xi for xi < 0, +inf otherwise.
inline double gev_upper_endpoint(const GevParams& p) {
  if (p.shape < 0.0 && !detail::is_gumbel(p.shape)) return p.location - p.scale / p.shape;
  return std::numeric_limits<double>::infinity();
}

/// Poisson-process parameters referenced to n_blocks blocks.
struct PpParams {
  GevParams gev;
  double n_blocks = 1.0;
};

/// Lambda{(x, inf) x (0, 1)} = N_B [1 + gamma(x - beta)/alpha]_+^(-1/gamma).
inline double pp_intensity_above(double x, const PpParams& p) {
  const double s = (x - p.gev.location) / p.gev.scale;
  const double lt = detail::log_tail_term(s, p.gev.shape);
  if (lt == -std::numeric_limits<double>::infinity()) return 0.0;
  return p.n_blocks * std::exp(lt);
}

/// Re-express a PP model referenced to p.n_blocks blocks as one referenced to
/// to_n_blocks blocks. The implied intensity measure is unchanged.
inline PpParams convert_pp_nblocks(const PpParams& p, double to_n_blocks) {
  if (!(p.n_blocks > 0.0) || !(to_n_blocks > 0.0)) {
    throw DomainError(detail::concat("convert_pp_nblocks: block counts must be positive (",
                                     p.n_blocks, " -> ", to_n_blocks, ")"));
  }
  require_valid(p.gev, "convert_pp_nblocks");
  const double log_ratio = std::log(p.n_blocks / to_n_blocks);
  const double g = p.gev.shape;
  PpParams out = p;
  out.n_blocks = to_n_blocks;
  if (detail::is_gumbel(g)) {
    out.gev.location = p.gev.location + p.gev.scale * log_ratio;
  } else {
    // beta' = beta - (alpha/gamma)(1 - r^gamma), alpha' = alpha r^gamma
    out.gev.scale = p.gev.scale * std::exp(g * log_ratio);
    out.gev.location = p.gev.location + p.gev.scale * std::expm1(g * log_ratio) / g;
  }
  return out;
}

}  // namespace evscale
