#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "evscale/asymptotics.hpp"
#include "evscale/boxcox.hpp"
#include "evscale/error.hpp"
#include "evscale/gev.hpp"
#include "evscale/model.hpp"
#include "evscale/optimize.hpp"

namespace evscale {

/// Smallest sample fit3_mle accepts.
inline constexpr std::size_t kMinFitSize = 20;

struct Fit3Result {
  GevParams params;
  double loglik = -std::numeric_limits<double>::infinity();
  /// Approximate standard errors of (location, scale, shape).
  std::array<double, 3> std_errors{};
  bool converged = false;
};

/// Maximum-likelihood fit that did not converge; carries the best state found.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, Fit3Result best) : NumericalError(what), best_(best) {}
  const Fit3Result& best() const { return best_; }

 private:
  Fit3Result best_;
};

struct FitOptions {
  int restarts = 6;
  std::uint64_t jitter_seed = 20240611;
  SimplexOptions simplex{1e-9, 6000};
};

namespace detail {

struct MomentStats {
  double mean = 0.0;
  double sd = 0.0;
};

inline MomentStats moments(std::span<const double> x) {
  MomentStats s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
  return s;
}

// Moment-based starting values; shape_start is the initial shape guess.
inline GevParams starting_values(std::span<const double> data, const ModelKind& kind,
                                 double shape_start) {
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind)) {
    double excess = 0.0;
    for (double v : data) excess += v - pp->threshold;
    excess /= static_cast<double>(data.size());
    // referenced to one block per exceedance: location sits at the threshold
    PpParams start{{pp->threshold, std::max(excess * (1.0 - shape_start), 1e-12), shape_start},
                   static_cast<double>(data.size())};
    return convert_pp_nblocks(start, pp->blocks_for(data.size())).gev;
  }
  const MomentStats m = moments(data);
  const double scale = std::sqrt(6.0) * m.sd / std::numbers::pi;
  return {m.mean - 0.57721566490153286 * scale, scale, shape_start};
}

inline void validate_fit_data(std::span<const double> data, const ModelKind& kind) {
  if (data.size() < kMinFitSize) {
    throw UsageError(concat("fit3_mle: need at least ", kMinFitSize, " points, got ",
                            data.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw UsageError("fit3_mle: non-finite data value");
  }
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind)) {
    for (double v : data) {
      if (!(v > pp->threshold)) {
        throw UsageError(concat("fit3_mle: value ", v, " does not exceed threshold ",
                                pp->threshold));
      }
    }
  }
}

}  // namespace detail

/// Three-parameter maximum-likelihood fit by Nelder-Mead from moment-based
/// starts, with standard errors from a finite-difference Hessian.
inline Fit3Result fit3_mle(std::span<const double> data, const ModelKind& kind,
                           const FitOptions& opts = {}) {
  detail::validate_fit_data(data, kind);
  const auto [mean, sd] = detail::moments(data);
  if (!(sd > 1e-12 * std::max(1.0, std::fabs(mean)))) {
    throw FitError("fit3_mle: data have no spread; the likelihood is unbounded", Fit3Result{});
  }

  // simplex coordinates ((location - mean)/sd, log scale, shape)
  auto objective = [&](std::span<const double> v) {
    return -loglik3(data, kind, GevParams{mean + sd * v[0], std::exp(v[1]), v[2]});
  };

  std::mt19937_64 rng(opts.jitter_seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  Fit3Result best;
  std::vector<double> best_x;
  const std::array<double, 3> shape_starts{0.1, -0.1, 0.0};
  for (int attempt = 0; attempt < opts.restarts; ++attempt) {
    const double shape0 = shape_starts[static_cast<std::size_t>(attempt) % shape_starts.size()];
    GevParams s = detail::starting_values(data, kind, shape0);
    if (attempt >= static_cast<int>(shape_starts.size())) {
      s.location += 0.5 * s.scale * jitter(rng);
      s.scale *= std::exp(0.3 * jitter(rng));
      s.shape += 0.1 * jitter(rng);
    }
    std::vector<double> x{(s.location - mean) / sd, std::log(s.scale), s.shape};
    const std::array<double, 3> steps{0.5 * s.scale / sd, 0.3, 0.1};
    const SimplexResult r = minimize_polished(objective, x, steps, opts.simplex);
    x = r.x;
    if (!r.converged) continue;
    if (!best.converged || -r.value > best.loglik) {
      best.params = {mean + sd * x[0], std::exp(x[1]), x[2]};
      best.loglik = -r.value;
      best.converged = true;
      best_x = x;
    }
    if (attempt >= 2 && best.converged) break;
  }
  if (!best.converged) {
    throw FitError("fit3_mle: simplex did not converge from any start", best);
  }

  auto natural = [&](std::span<const double> v) {
    if (!(v[1] > 0.0)) return std::numeric_limits<double>::infinity();
    return -loglik3(data, kind, GevParams{v[0], v[1], v[2]});
  };
  const std::array<double, 3> at{best.params.location, best.params.scale, best.params.shape};
  const double sc = best.params.scale;
  const std::array<double, 3> h{1e-4 * sc, 1e-4 * sc, 1e-4};
  const Eigen::MatrixXd hess = numeric_hessian(natural, at, h);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
  bool se_ok = hess.allFinite() && ldlt.info() == Eigen::Success && ldlt.isPositive() &&
               (ldlt.vectorD().array() > 0.0).all();
  if (se_ok) {
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(3, 3));
    for (int i = 0; i < 3; ++i) {
      if (!(cov(i, i) > 0.0)) se_ok = false;
      best.std_errors[static_cast<std::size_t>(i)] = std::sqrt(std::max(cov(i, i), 0.0));
    }
  }
  if (!se_ok) {
    best.converged = false;
    throw FitError("fit3_mle: observed information is not positive definite", best);
  }
  return best;
}

struct ProfileCell {
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  double beta_x = 0.0;
  double log_alpha_x = 0.0;
};

namespace detail {

// Start for (beta_X, log alpha_X) from moments of the transformed sample.
inline std::array<double, 2> default_profile_start(TransformedSample& sample,
                                                   const ModelKind& kind, double gamma_y,
                                                   double lambda) {
  const auto y = sample.transformed(lambda);
  ModelKind y_kind = kind;
  if (auto* pp = std::get_if<ThresholdExceedances>(&y_kind)) {
    pp->threshold = boxcox(pp->threshold, lambda);
  }
  GevParams s = starting_values(y, y_kind, gamma_y);
  if (lambda <= -kBoxCoxLogSwitch && gamma_y < 0.0) {
    // widening the scale cannot reach the support here: put the end point
    // midway between the largest value and the bound -1/lambda
    const double top = *std::max_element(y.begin(), y.end());
    const double end = 0.5 * (top - 1.0 / lambda);
    s.location = std::min(s.location, 0.5 * (top + end));
    s.scale = -gamma_y * (end - s.location);
  }
  double beta_x;
  if (in_boxcox_range(s.location, lambda)) {
    beta_x = inverse_boxcox(s.location, lambda);
  } else {
    std::vector<double> sorted(sample.original().begin(), sample.original().end());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    beta_x = sorted[sorted.size() / 2];
  }
  return {beta_x, std::log(s.scale) - (lambda - 1.0) * std::log(beta_x)};
}

}  // namespace detail

/// Profile log-likelihood at fixed (gamma_Y, lambda): loglik4 maximized over
/// (beta_X, log alpha_X). Cells outside the parameter space (lambda < 0 with
/// gamma_Y >= 0) are returned as converged with value -inf.
inline ProfileCell profile_loglik(TransformedSample& sample, const ModelKind& kind,
                                  double gamma_y, double lambda,
                                  std::optional<std::array<double, 2>> start = std::nullopt,
                                  const SimplexOptions& simplex = {1e-7, 4000}) {
  if (lambda <= -kBoxCoxLogSwitch && gamma_y >= 0.0) {
    return {-std::numeric_limits<double>::infinity(), true, 0.0, 0.0};
  }
  // simplex coordinates (log beta_X, log alpha_X)
  auto objective = [&](std::span<const double> v) {
    return -loglik4(sample, kind, TransformedModel(std::exp(v[0]), v[1], gamma_y, lambda, 0.0));
  };
  std::vector<std::array<double, 2>> starts;
  if (start) starts.push_back(*start);
  starts.push_back(detail::default_profile_start(sample, kind, gamma_y, lambda));

  ProfileCell best;
  for (const auto& s0 : starts) {
    if (!(s0[0] > 0.0)) continue;
    std::vector<double> x{std::log(s0[0]), s0[1]};
    // a wider scale moves the support end point past the data
    for (int k = 0; k < 60 && !std::isfinite(objective(x)); ++k) x[1] += 0.5;
    if (!std::isfinite(objective(x))) continue;
    const std::array<double, 2> steps{0.05, 0.1};
    const SimplexResult r = minimize_polished(objective, x, steps, simplex);
    x = r.x;
    if (r.converged && -r.value > best.loglik) {
      best = {-r.value, true, std::exp(x[0]), x[1]};
    }
    if (best.converged) break;
  }
  return best;
}

inline ProfileCell profile_loglik(std::span<const double> data, const ModelKind& kind,
                                  double gamma_y, double lambda,
                                  std::optional<std::array<double, 2>> start = std::nullopt) {
  TransformedSample sample(data);
  return profile_loglik(sample, kind, gamma_y, lambda, start);
}

/// Profile log-likelihood over a rectangular (gamma_Y, lambda) grid; cell
/// (i, j) corresponds to (gamma_values[i], lambda_values[j]).
struct ProfileGrid {
  std::vector<double> gamma_values;
  std::vector<double> lambda_values;
  std::vector<double> loglik;
  std::vector<std::uint8_t> converged;

  std::size_t index(std::size_t i, std::size_t j) const { return i * lambda_values.size() + j; }
  double at(std::size_t i, std::size_t j) const { return loglik[index(i, j)]; }
  bool converged_at(std::size_t i, std::size_t j) const { return converged[index(i, j)] != 0; }
  std::size_t converged_count() const {
    return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 1));
  }
};

struct GridSpec {
  std::size_t gamma_points = 41;
  std::size_t lambda_points = 41;
  double lambda_min = -1.0;
  double lambda_max = 4.0;
  /// Half-width of the gamma axis in standard errors of the shape estimate.
  double gamma_halfwidth_se = 4.0;
  /// Widen the gamma axis so the likelihood ridge stays on the grid at the
  /// lambda extremes.
  bool cover_ridge = true;
  /// Explicit gamma range; overrides the automatic axis when set.
  std::optional<std::array<double, 2>> gamma_range;
};

namespace detail {

// Three-parameter fit of the transformed sample at fixed lambda; the shape of
// this fit is the ridge location of the profile in that lambda column.
inline std::optional<Fit3Result> transformed_fit(std::span<const double> data,
                                                 const ModelKind& kind, double lambda) {
  std::vector<double> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = boxcox(data[i], lambda);
  ModelKind y_kind = kind;
  if (auto* pp = std::get_if<ThresholdExceedances>(&y_kind)) {
    pp->threshold = boxcox(pp->threshold, lambda);
  }
  try {
    return fit3_mle(y, y_kind);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Ridge trace: the shape of a 3-parameter fit to the transformed data at
/// each lambda. Empty entries mark columns where the fit failed.
inline std::vector<std::optional<double>> ridge_trace(std::span<const double> data,
                                                      const ModelKind& kind,
                                                      std::span<const double> lambdas) {
  std::vector<std::optional<double>> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    const auto fit = detail::transformed_fit(data, kind, l);
    out.push_back(fit ? std::optional<double>(fit->params.shape) : std::nullopt);
  }
  return out;
}

/// Evaluate the profile grid. Columns are swept outward from the one nearest
/// lambda = 1, each cell warm-started from its converged neighbour.
inline ProfileGrid build_grid(std::span<const double> data, const ModelKind& kind,
                              const Fit3Result& fit3, const GridSpec& spec = {}) {
  if (!fit3.converged) throw UsageError("build_grid: the 3-parameter fit did not converge");
  if (spec.gamma_points == 0 || spec.lambda_points == 0) {
    throw UsageError("build_grid: grid dimensions must be positive");
  }
  if (!(spec.lambda_min <= spec.lambda_max)) throw UsageError("build_grid: empty lambda range");

  ProfileGrid grid;
  grid.lambda_values = linspace(spec.lambda_min, spec.lambda_max, spec.lambda_points);

  double g_lo, g_hi;
  if (spec.gamma_range) {
    g_lo = (*spec.gamma_range)[0];
    g_hi = (*spec.gamma_range)[1];
  } else {
    const double half = spec.gamma_halfwidth_se * fit3.std_errors[2];
    g_lo = fit3.params.shape - half;
    g_hi = fit3.params.shape + half;
    if (spec.cover_ridge && spec.lambda_points > 1) {
      for (double l : {spec.lambda_min, spec.lambda_max}) {
        if (const auto f = detail::transformed_fit(data, kind, l)) {
          const double w = spec.gamma_halfwidth_se * f->std_errors[2];
          g_lo = std::min(g_lo, f->params.shape - w);
          g_hi = std::max(g_hi, f->params.shape + w);
        }
      }
    }
  }
  grid.gamma_values = linspace(g_lo, g_hi, spec.gamma_points);

  const std::size_t ng = grid.gamma_values.size();
  const std::size_t nl = grid.lambda_values.size();
  grid.loglik.assign(ng * nl, -std::numeric_limits<double>::infinity());
  grid.converged.assign(ng * nl, 0);
  std::vector<std::array<double, 2>> nuisance(ng * nl);

  TransformedSample sample(data);

  auto nearest = [](const std::vector<double>& axis, double v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < axis.size(); ++k) {
      if (std::fabs(axis[k] - v) < std::fabs(axis[best] - v)) best = k;
    }
    return best;
  };

  auto sweep_column = [&](std::size_t j, std::optional<std::size_t> prev_col,
                          std::size_t first_row, std::optional<std::array<double, 2>> seed) {
    auto solve = [&](std::size_t i, std::optional<std::size_t> neighbour_row) {
      std::optional<std::array<double, 2>> start;
      if (prev_col && grid.converged[grid.index(i, *prev_col)]) {
        start = nuisance[grid.index(i, *prev_col)];
      } else if (neighbour_row && grid.converged[grid.index(*neighbour_row, j)]) {
        start = nuisance[grid.index(*neighbour_row, j)];
      } else if (seed) {
        start = seed;
      }
      ProfileCell cell =
          profile_loglik(sample, kind, grid.gamma_values[i], grid.lambda_values[j], start);
      if (!cell.converged && neighbour_row && grid.converged[grid.index(*neighbour_row, j)] &&
          prev_col) {
        cell = profile_loglik(sample, kind, grid.gamma_values[i], grid.lambda_values[j],
                              nuisance[grid.index(*neighbour_row, j)]);
      }
      const std::size_t k = grid.index(i, j);
      grid.loglik[k] = cell.loglik;
      grid.converged[k] = cell.converged ? 1 : 0;
      nuisance[k] = {cell.beta_x, cell.log_alpha_x};
    };
    solve(first_row, std::nullopt);
    for (std::size_t i = first_row + 1; i < ng; ++i) solve(i, i - 1);
    for (std::size_t i = first_row; i-- > 0;) solve(i, i + 1);
  };

  auto best_row = [&](std::size_t j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ng; ++i) {
      if (grid.loglik[grid.index(i, j)] > grid.loglik[grid.index(best, j)]) best = i;
    }
    return best;
  };

  const std::size_t j1 = nearest(grid.lambda_values, 1.0);
  const std::array<double, 2> fit_start{fit3.params.location, std::log(fit3.params.scale)};
  sweep_column(j1, std::nullopt, nearest(grid.gamma_values, fit3.params.shape),
               fit3.params.location > 0.0 ? std::optional(fit_start) : std::nullopt);
  for (std::size_t j = j1 + 1; j < nl; ++j) sweep_column(j, j - 1, best_row(j - 1), std::nullopt);
  for (std::size_t j = j1; j-- > 0;) sweep_column(j, j + 1, best_row(j + 1), std::nullopt);
  return grid;
}

/// Weighted least-squares line gamma_Y = intercept + slope * lambda.
struct RidgeFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Kish effective number of cells carrying the weight.
  double effective_cells = 0.0;
};

/// Weights exp[-2 {max Pl - Pl(gamma, lambda)}] over converged cells.
inline std::vector<double> ridge_weights(const ProfileGrid& grid) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.loglik.size(); ++k) {
    if (grid.converged[k] && std::isfinite(grid.loglik[k])) top = std::max(top, grid.loglik[k]);
  }
  if (!std::isfinite(top)) throw NumericalError("estimate_c: grid has no finite converged cell");
  std::vector<double> w(grid.loglik.size(), 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (grid.converged[k] && std::isfinite(grid.loglik[k])) {
      w[k] = std::exp(-2.0 * (top - grid.loglik[k]));
    }
  }
  return w;
}

inline RidgeFit fit_ridge_slope(const ProfileGrid& grid) {
  const std::vector<double> w = ridge_weights(grid);
  double sw = 0.0, sl = 0.0, sg = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < grid.gamma_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.lambda_values.size(); ++j) {
      const double wk = w[grid.index(i, j)];
      sw += wk;
      sw2 += wk * wk;
      sl += wk * grid.lambda_values[j];
      sg += wk * grid.gamma_values[i];
    }
  }
  const double lbar = sl / sw;
  const double gbar = sg / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < grid.gamma_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.lambda_values.size(); ++j) {
      const double wk = w[grid.index(i, j)];
      const double dl = grid.lambda_values[j] - lbar;
      sxx += wk * dl * dl;
      sxy += wk * dl * (grid.gamma_values[i] - gbar);
    }
  }
  const double spread = grid.lambda_values.back() - grid.lambda_values.front();
  if (!(sxx > 1e-12 * sw * std::max(spread * spread, 1e-300))) {
    throw NumericalError(
        "estimate_c: weights carry no lambda spread; refine or widen the profile grid");
  }
  RidgeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = gbar - fit.slope * lbar;
  fit.effective_cells = sw * sw / sw2;
  return fit;
}

/// Slope c of the high-likelihood ridge in the (gamma_Y, lambda) profile.
inline double estimate_c(const ProfileGrid& grid) { return fit_ridge_slope(grid).slope; }

}  // namespace evscale
