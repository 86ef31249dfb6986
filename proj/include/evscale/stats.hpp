#pragma once

// Small empirical summaries shared by the data, sampler and returns modules.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "evscale/error.hpp"

namespace evscale {

/// Type-7 (linear interpolation) empirical quantile of an ascending sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw UsageError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError(detail::concat("quantile: q = ", q));
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw UsageError("mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("correlation: size mismatch");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Kolmogorov distance between the empirical law of x and a continuous cdf.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw UsageError("ks_distance: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Mode of a Gaussian kernel density estimate (Silverman bandwidth),
/// located on a fine grid spanning the sample.
inline double kde_mode(std::span<const double> x, std::size_t grid_points = 2001) {
  if (x.size() < 2) throw UsageError("kde_mode: need at least two points");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = sample_sd(sorted);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) return sorted.front();
  const double bw = 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
  const double lo = sorted.front(), hi = sorted.back();
  double best_x = lo, best_d = -1.0;
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double t = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    // only points within 6 bandwidths contribute meaningfully
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), t - 6.0 * bw);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), t + 6.0 * bw);
    double dens = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (t - *it) / bw;
      dens += std::exp(-0.5 * z * z);
    }
    if (dens > best_d) {
      best_d = dens;
      best_x = t;
    }
  }
  return best_x;
}

}  // namespace evscale
