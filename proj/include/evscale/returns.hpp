#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "evscale/boxcox.hpp"
#include "evscale/error.hpp"
#include "evscale/gev.hpp"
#include "evscale/model.hpp"
#include "evscale/sampler.hpp"
#include "evscale/stats.hpp"

namespace evscale {

/// Y-scale level exceeded by a block maximum with probability p:
///   y = beta - (alpha/gamma)[1 - {-log(1-p)}^(-gamma)].
inline double return_level_y(const GevParams& y, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(detail::concat("return level: probability ", p, " outside (0,1)"));
  }
  const double ly = std::log(-std::log1p(-p));
  if (detail::is_gumbel(y.shape)) return y.location - y.scale * ly;
  return y.location + y.scale * std::expm1(-y.shape * ly) / y.shape;
}

/// 1/p block return level on the original scale.
inline double return_level(const GevParams& y, double lambda, double p) {
  const double level = return_level_y(y, p);
  if (!in_boxcox_range(level, lambda)) {
    throw DomainError(detail::concat("return level: transformed quantile ", level,
                                     " is outside the Box-Cox range for lambda = ", lambda,
                                     " (parameters ", y.location, ", ", y.scale, ", ", y.shape,
                                     ")"));
  }
  return inverse_boxcox(level, lambda);
}

inline double return_level(const TransformedModel& m, double p) {
  return return_level(to_y_params(m), m.lambda(), p);
}

/// Y-scale parameters of a draw, expressed per reporting block.
inline GevParams reporting_params(const PosteriorDraws& draws, const DrawRow& row) {
  if (is_threshold_kind(draws.kind) && draws.report_blocks != draws.n_blocks) {
    return convert_pp_nblocks({row.y_params(), draws.n_blocks}, draws.report_blocks).gev;
  }
  return row.y_params();
}

/// Per-draw return levels at probability p (in reporting blocks).
inline std::vector<double> draw_return_levels(const PosteriorDraws& draws, double p) {
  std::vector<double> out;
  out.reserve(draws.rows.size());
  for (std::size_t i = 0; i < draws.rows.size(); ++i) {
    try {
      out.push_back(return_level(reporting_params(draws, draws.rows[i]), draws.rows[i].lambda, p));
    } catch (const DomainError& e) {
      throw DomainError(detail::concat("draw ", i, ": ", e.what()));
    }
  }
  return out;
}

struct ReturnLevelSummary {
  double return_period = 0.0;
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  /// Posterior predictive level; NaN when not requested.
  double predictive = std::numeric_limits<double>::quiet_NaN();
};

inline ReturnLevelSummary posterior_return_levels(const PosteriorDraws& draws, double p,
                                                  double level = 0.95) {
  if (draws.rows.empty()) throw UsageError("posterior_return_levels: no draws");
  if (!(level > 0.0 && level < 1.0)) {
    throw UsageError(detail::concat("posterior_return_levels: interval level ", level));
  }
  std::vector<double> v = draw_return_levels(draws, p);
  std::sort(v.begin(), v.end());
  const double tail = 0.5 * (1.0 - level);
  return {1.0 / p, quantile_sorted(v, 0.5), quantile_sorted(v, tail),
          quantile_sorted(v, 1.0 - tail), level};
}

/// Factor by which the predictive root bracket is widened, and how often.
inline constexpr double kBracketExpansion = 1.5;
inline constexpr int kBracketExpansions = 10;

/// Posterior predictive 1/p level: solves mean_draws P(M <= x) = 1 - p by
/// bisection, working with the averaged survival for accuracy at small p.
inline double predictive_return_level(const PosteriorDraws& draws, double p,
                                      double rel_tol = 1e-8) {
  if (draws.rows.empty()) throw UsageError("predictive_return_level: no draws");
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(detail::concat("predictive_return_level: probability ", p));
  }
  std::vector<GevParams> params;
  params.reserve(draws.rows.size());
  for (const auto& r : draws.rows) params.push_back(reporting_params(draws, r));

  auto survival = [&](double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      s += gev_survival(boxcox(x, draws.rows[i].lambda), params[i]);
    }
    return s / static_cast<double>(params.size());
  };

  const std::vector<double> levels = draw_return_levels(draws, p);
  const auto [mn, mx] = std::minmax_element(levels.begin(), levels.end());
  double lo = *mn, hi = *mx;
  double s_lo = survival(lo), s_hi = survival(hi);
  for (int k = 0; k < kBracketExpansions && !(s_lo >= p && s_hi <= p); ++k) {
    if (s_lo < p) lo /= kBracketExpansion;
    if (s_hi > p) hi *= kBracketExpansion;
    s_lo = survival(lo);
    s_hi = survival(hi);
  }
  if (!(s_lo >= p && s_hi <= p)) {
    throw NumericalError(detail::concat("predictive_return_level: no bracket for p = ", p,
                                        " after ", kBracketExpansions, " expansions"));
  }
  for (int it = 0; it < 400 && hi - lo > rel_tol * std::fabs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s_mid = survival(mid);
    if (s_mid > s_lo || s_mid < s_hi) {
      throw NumericalError("predictive_return_level: averaged cdf is not monotone on the bracket");
    }
    if (s_mid > p) {
      lo = mid;
      s_lo = s_mid;
    } else {
      hi = mid;
      s_hi = s_mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Summaries over several return periods (in blocks), with predictive levels.
inline std::vector<ReturnLevelSummary> return_level_table(const PosteriorDraws& draws,
                                                          std::span<const double> periods,
                                                          double level = 0.95,
                                                          bool with_predictive = true) {
  std::vector<ReturnLevelSummary> out;
  for (double t : periods) {
    if (!(t > 1.0)) throw UsageError(detail::concat("return period must exceed 1, got ", t));
    ReturnLevelSummary s = posterior_return_levels(draws, 1.0 / t, level);
    if (with_predictive) s.predictive = predictive_return_level(draws, 1.0 / t);
    out.push_back(s);
  }
  return out;
}

struct QqPoint {
  double empirical = 0.0;
  double fitted_median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Quantile q of the law of a single observation under one draw: the block
/// maximum for block-maxima models, the conditional exceedance size above the
/// threshold for threshold models (the latter does not depend on N_B).
inline double model_quantile(const GevParams& y, double lambda, const ModelKind& kind, double q) {
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind)) {
    const double u_y = boxcox(pp->threshold, lambda);
    double level;
    if (detail::is_gumbel(y.shape)) {
      level = u_y - y.scale * std::log1p(-q);
    } else {
      const double z_u = 1.0 + y.shape * (u_y - y.location) / y.scale;
      const double z = z_u * std::exp(-y.shape * std::log1p(-q));
      level = y.location + y.scale * (z - 1.0) / y.shape;
    }
    if (!in_boxcox_range(level, lambda)) {
      throw DomainError(detail::concat("qq: quantile ", level, " outside the Box-Cox range"));
    }
    return inverse_boxcox(level, lambda);
  }
  return return_level(y, lambda, 1.0 - q);
}

/// QQ table at plotting positions i/(m+1) with posterior median and a
/// central pointwise credible band.
inline std::vector<QqPoint> qq_data(const PosteriorDraws& draws, std::span<const double> sorted,
                                    double level = 0.95) {
  if (draws.rows.empty()) throw UsageError("qq_data: no draws");
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw UsageError("qq_data: data must be sorted ascending");
  }
  const double m = static_cast<double>(sorted.size());
  const double tail = 0.5 * (1.0 - level);
  std::vector<QqPoint> out;
  out.reserve(sorted.size());
  std::vector<double> v(draws.rows.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double q = static_cast<double>(i + 1) / (m + 1.0);
    for (std::size_t d = 0; d < draws.rows.size(); ++d) {
      v[d] = model_quantile(draws.rows[d].y_params(), draws.rows[d].lambda, draws.kind, q);
    }
    std::sort(v.begin(), v.end());
    out.push_back({sorted[i], quantile_sorted(v, 0.5), quantile_sorted(v, tail),
                   quantile_sorted(v, 1.0 - tail)});
  }
  return out;
}

}  // namespace evscale
