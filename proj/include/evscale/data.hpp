#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evscale/csv.hpp"
#include "evscale/error.hpp"
#include "evscale/gev.hpp"
#include "evscale/stats.hpp"

namespace evscale {

struct Series {
  std::vector<double> values;
  std::optional<std::size_t> block_length;
  std::string units;
  /// For exceedance files: the threshold and the number of blocks spanned.
  std::optional<double> threshold;
  std::optional<double> n_blocks;
};

struct ExceedanceSet {
  std::vector<double> exceedances;
  double threshold = 0.0;
  /// Size of the series the exceedances were taken from.
  std::size_t n_total = 0;
  double n_blocks = 1.0;
  /// Position of each exceedance in time, in blocks (empty if unknown).
  std::vector<double> times;
};

namespace detail {

// Uniform on the open interval (0, 1).
inline double open_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 0.0;
  while (v == 0.0) v = u(rng);
  return v;
}

}  // namespace detail

/// Threshold u with Lambda{(u, inf) x (0, 1)} = total_intensity.
inline double pp_threshold_for_intensity(const PpParams& p, double total_intensity) {
  require_valid(p.gev, "pp_threshold_for_intensity");
  if (!(total_intensity > 0.0) || !std::isfinite(total_intensity) || !(p.n_blocks > 0.0)) {
    throw DomainError(detail::concat("simulate_pp: total intensity ", total_intensity,
                                     " must be positive and finite"));
  }
  const double log_ratio = std::log(total_intensity / p.n_blocks);
  double u;
  if (detail::is_gumbel(p.gev.shape)) {
    u = p.gev.location - p.gev.scale * log_ratio;
  } else {
    // z_u = (Lambda_total/N_B)^(-gamma)
    u = p.gev.location + p.gev.scale * std::expm1(-p.gev.shape * log_ratio) / p.gev.shape;
  }
  if (!std::isfinite(u)) {
    throw DomainError(detail::concat("simulate_pp: total intensity ", total_intensity,
                                     " gives no finite threshold"));
  }
  return u;
}

/// Poisson process on (0, 1) x (u, inf) with the GEV-compatible intensity,
/// u chosen so the expected number of points is total_intensity. Times are
/// returned in blocks, ascending.
inline ExceedanceSet simulate_pp(const PpParams& p, double total_intensity, std::uint64_t seed,
                                 bool fixed_count = false) {
  const double u = pp_threshold_for_intensity(p, total_intensity);
  std::mt19937_64 rng(seed);
  std::size_t count;
  if (fixed_count) {
    count = static_cast<std::size_t>(std::llround(total_intensity));
  } else {
    std::poisson_distribution<std::int64_t> pois(total_intensity);
    count = static_cast<std::size_t>(pois(rng));
  }
  ExceedanceSet out;
  out.threshold = u;
  out.n_total = count;
  out.n_blocks = p.n_blocks;
  out.times.resize(count);
  for (auto& t : out.times) t = detail::open_uniform(rng) * p.n_blocks;
  std::sort(out.times.begin(), out.times.end());

  const GevParams& g = p.gev;
  const double z_u = 1.0 + g.shape * (u - g.location) / g.scale;
  out.exceedances.resize(count);
  for (auto& x : out.exceedances) {
    // conditional survival above u is (z_x/z_u)^(-1/gamma)
    const double v = detail::open_uniform(rng);
    if (detail::is_gumbel(g.shape)) {
      x = u - g.scale * std::log(v);
    } else {
      x = g.location + g.scale * (z_u * std::exp(-g.shape * std::log(v)) - 1.0) / g.shape;
    }
  }
  return out;
}

/// Maxima of the points falling in each unit block of a simulated process;
/// blocks without points are skipped.
inline std::vector<double> pp_block_maxima(const ExceedanceSet& s) {
  const auto nb = static_cast<std::size_t>(std::ceil(s.n_blocks));
  std::vector<double> best(nb, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < s.exceedances.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>(s.times[i]), nb - 1);
    best[b] = std::max(best[b], s.exceedances[i]);
  }
  std::erase_if(best, [](double v) { return !std::isfinite(v); });
  return best;
}

/// Draws with cdf 2 Phi(x) - 1 on x > 0, by inversion.
inline Series simulate_truncated_normal(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("simulate_truncated_normal: n must be positive");
  std::mt19937_64 rng(seed);
  Series s;
  s.values.resize(n);
  for (auto& x : s.values) {
    x = std::numbers::sqrt2 * boost::math::erfc_inv(detail::open_uniform(rng));
  }
  return s;
}

inline Series simulate_gev(const GevParams& p, std::size_t n, std::uint64_t seed) {
  require_valid(p, "simulate_gev");
  std::mt19937_64 rng(seed);
  Series s;
  s.values.resize(n);
  for (auto& x : s.values) x = gev_quantile(detail::open_uniform(rng), p);
  return s;
}

struct BlockMaximaResult {
  Series maxima;
  /// Observations in the trailing partial block that were dropped.
  std::size_t dropped = 0;
};

inline BlockMaximaResult block_maxima(const Series& s, std::size_t block_length) {
  if (block_length == 0) throw UsageError("block_maxima: block length must be at least 1");
  BlockMaximaResult out;
  out.maxima.units = s.units;
  out.maxima.block_length = 1;
  const std::size_t full = s.values.size() / block_length;
  out.maxima.values.reserve(full);
  for (std::size_t b = 0; b < full; ++b) {
    const auto first = s.values.begin() + static_cast<std::ptrdiff_t>(b * block_length);
    out.maxima.values.push_back(
        *std::max_element(first, first + static_cast<std::ptrdiff_t>(block_length)));
  }
  out.dropped = s.values.size() - full * block_length;
  return out;
}

namespace detail {

inline ExceedanceSet exceedances_above(std::span<const double> values, double u,
                                       double n_blocks) {
  ExceedanceSet out;
  out.threshold = u;
  out.n_total = values.size();
  out.n_blocks = n_blocks;
  for (double v : values) {
    if (v > u) out.exceedances.push_back(v);
  }
  return out;
}

inline double default_blocks(const Series& s) {
  return s.block_length ? static_cast<double>(s.values.size()) / static_cast<double>(*s.block_length)
                        : 1.0;
}

}  // namespace detail

/// Strict exceedances of the (n-k)th order statistic; with k = n the
/// threshold sits just below the minimum. Ties at the threshold can leave
/// fewer than k points.
inline ExceedanceSet largest_k(const Series& s, std::size_t k) {
  const std::size_t n = s.values.size();
  if (k < 1 || k > n) throw UsageError(detail::concat("largest_k: k = ", k, " with n = ", n));
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  const double u = k == n ? std::nextafter(sorted.front(), -std::numeric_limits<double>::infinity())
                          : sorted[n - k - 1];
  return detail::exceedances_above(s.values, u, detail::default_blocks(s));
}

/// Strict exceedances of the type-7 empirical q-quantile.
inline ExceedanceSet threshold_at_quantile(const Series& s, double q) {
  if (!(q > 0.0 && q < 1.0)) throw UsageError(detail::concat("threshold_at_quantile: q = ", q));
  return detail::exceedances_above(s.values, quantile(s.values, q), detail::default_blocks(s));
}

/// Runs declustering: an exceedance starts a new cluster once at least
/// run_gap consecutive observations at or below u separate it from the
/// previous exceedance. One maximum per cluster; times hold its index.
inline ExceedanceSet decluster_runs(const Series& s, double u, std::size_t run_gap) {
  if (run_gap < 1) throw UsageError("decluster_runs: run gap must be at least 1");
  ExceedanceSet out;
  out.threshold = u;
  out.n_total = s.values.size();
  out.n_blocks = detail::default_blocks(s);
  bool in_cluster = false;
  std::size_t below = 0;
  double best = 0.0;
  std::size_t best_index = 0;
  auto flush = [&] {
    out.exceedances.push_back(best);
    out.times.push_back(static_cast<double>(best_index));
  };
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double v = s.values[i];
    if (v > u) {
      if (in_cluster && below >= run_gap) {
        flush();
        in_cluster = false;
      }
      if (!in_cluster || v > best) {
        best = v;
        best_index = i;
      }
      in_cluster = true;
      below = 0;
    } else {
      ++below;
    }
  }
  if (in_cluster) flush();
  return out;
}

/// Which column of a CSV to read: by header name or 0-based index.
using ColumnSpec = std::variant<std::string, std::size_t>;

inline std::string meta_path(const std::string& path) { return path + ".meta"; }

/// Reads a numeric column of a headered CSV. Optional sidecar <path>.meta
/// holds key = value lines (block_length, units).
inline Series read_series(const std::string& path, const ColumnSpec& column = std::size_t{0}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> col;
  Series s;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (!col) {
      if (const auto* name = std::get_if<std::string>(&column)) {
        const auto it = std::find(fields.begin(), fields.end(), *name);
        if (it == fields.end()) throw UsageError(path + ": no column named '" + *name + "'");
        col = static_cast<std::size_t>(it - fields.begin());
      } else {
        col = std::get<std::size_t>(column);
        if (*col >= fields.size()) {
          throw UsageError(detail::concat(path, ": header has only ", fields.size(), " columns"));
        }
      }
      continue;
    }
    if (*col >= fields.size()) {
      throw UsageError(detail::concat(path, ":", line_no, ": missing column ", *col));
    }
    const auto v = csv::parse_double(fields[*col]);
    if (!v || !std::isfinite(*v)) {
      throw UsageError(detail::concat(path, ":", line_no, ": non-numeric value '", fields[*col],
                                      "'"));
    }
    s.values.push_back(*v);
  }
  if (!col) throw UsageError(path + ": empty file");

  std::ifstream meta(meta_path(path));
  std::size_t meta_line = 0;
  while (meta && std::getline(meta, line)) {
    ++meta_line;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(detail::concat(meta_path(path), ":", meta_line, ": expected key = value"));
    }
    const auto key = csv::trim(t.substr(0, eq));
    const auto value = csv::trim(t.substr(eq + 1));
    if (key == "block_length") {
      const auto v = csv::parse_double(value);
      if (!v || *v < 1.0 || *v != std::floor(*v)) {
        throw UsageError(detail::concat(meta_path(path), ":", meta_line, ": bad block_length"));
      }
      s.block_length = static_cast<std::size_t>(*v);
    } else if (key == "units") {
      s.units = std::string(value);
    } else if (key == "threshold" || key == "n_blocks") {
      const auto v = csv::parse_double(value);
      if (!v || !std::isfinite(*v)) {
        throw UsageError(detail::concat(meta_path(path), ":", meta_line, ": bad ", key));
      }
      (key == "threshold" ? s.threshold : s.n_blocks) = *v;
    }
  }
  return s;
}

inline void write_series(const std::string& path, const Series& s,
                         const std::string& column = "value") {
  csv::Writer w(path, {column});
  for (double v : s.values) w.row({v});
  w.close();
  if (s.block_length || !s.units.empty() || s.threshold || s.n_blocks) {
    std::ofstream meta(meta_path(path));
    if (s.block_length) meta << "block_length = " << *s.block_length << '\n';
    if (!s.units.empty()) meta << "units = " << s.units << '\n';
    if (s.threshold) meta << "threshold = " << csv::format(*s.threshold) << '\n';
    if (s.n_blocks) meta << "n_blocks = " << csv::format(*s.n_blocks) << '\n';
  } else {
    std::filesystem::remove(meta_path(path));
  }
}

/// Exceedances with their times when known.
inline void write_exceedances(const std::string& path, const ExceedanceSet& e) {
  const bool timed = e.times.size() == e.exceedances.size() && !e.times.empty();
  csv::Writer w(path, timed ? std::vector<std::string>{"value", "time"}
                            : std::vector<std::string>{"value"});
  for (std::size_t i = 0; i < e.exceedances.size(); ++i) {
    if (timed) {
      w.row({e.exceedances[i], e.times[i]});
    } else {
      w.row({e.exceedances[i]});
    }
  }
  w.close();
}

}  // namespace evscale
