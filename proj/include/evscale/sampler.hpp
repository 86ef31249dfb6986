#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evscale/boxcox.hpp"
#include "evscale/error.hpp"
#include "evscale/model.hpp"
#include "evscale/profile.hpp"
#include "evscale/stats.hpp"

namespace evscale {

/// Independent Gaussian priors on (beta_X, log alpha_X, gamma_X) and a uniform
/// prior on lambda. A degenerate lambda range pins lambda at that value.
struct PriorSpec {
  std::array<double, 3> gaussian_center{};
  double gaussian_variance = 1e4;
  double lambda_lo = -1.0;
  double lambda_hi = 4.0;

  bool lambda_fixed() const { return lambda_lo == lambda_hi; }

  void validate() const {
    if (!(gaussian_variance > 0.0)) {
      throw UsageError(detail::concat("prior variance must be positive, got ", gaussian_variance));
    }
    if (!(lambda_lo <= lambda_hi) || !std::isfinite(lambda_lo) || !std::isfinite(lambda_hi)) {
      throw UsageError(detail::concat("invalid lambda prior range [", lambda_lo, ", ", lambda_hi,
                                      "]"));
    }
    for (double v : gaussian_center) {
      if (!std::isfinite(v)) throw UsageError("prior center must be finite");
    }
  }
};

/// Prior centered on a 3-parameter fit of the untransformed data.
inline PriorSpec prior_from_fit(const Fit3Result& fit, double lambda_lo, double lambda_hi,
                                double variance = 1e4) {
  return {{fit.params.location, std::log(fit.params.scale), fit.params.shape},
          variance,
          lambda_lo,
          lambda_hi};
}

struct SamplerConfig {
  std::size_t iterations = 10000;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 1;
  /// Random-walk standard deviations for (beta_X, log alpha_X, gamma_X).
  std::array<double, 3> step_scales{0.1, 0.05, 0.05};
  bool adapt = true;
  /// Switch the likelihood off to sample the prior restricted to the support.
  bool likelihood_enabled = true;
  std::optional<std::array<double, 4>> initial_state;

  void validate() const {
    if (iterations == 0) throw UsageError("sampler iterations must be positive");
    for (double s : step_scales) {
      if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("step scales must be positive");
    }
  }
};

/// Step scales from fit standard errors (log-scale error by the delta method).
inline std::array<double, 3> steps_from_fit(const Fit3Result& fit) {
  const auto pos = [](double v, double fallback) { return v > 0.0 && std::isfinite(v) ? v : fallback; };
  return {pos(fit.std_errors[0], 0.1 * fit.params.scale),
          pos(fit.std_errors[1] / fit.params.scale, 0.05), pos(fit.std_errors[2], 0.05)};
}

struct DrawRow {
  double beta_x = 0.0;
  double log_alpha_x = 0.0;
  double gamma_x = 0.0;
  double lambda = 1.0;
  double beta_y = 0.0;
  double alpha_y = 0.0;
  double gamma_y = 0.0;
  double log_posterior = 0.0;

  TransformedModel model(double c) const {
    return TransformedModel(beta_x, log_alpha_x, gamma_x, lambda, c);
  }
  GevParams y_params() const { return {beta_y, alpha_y, gamma_y}; }
};

inline constexpr std::array<const char*, 4> kSampledNames{"beta_x", "log_alpha_x", "gamma_x",
                                                          "lambda"};

struct PosteriorDraws {
  std::vector<DrawRow> rows;
  /// Post burn-in acceptance of (beta_X, log alpha_X, gamma_X, lambda); NaN
  /// for lambda when it is pinned.
  std::array<double, 4> acceptance{};
  std::array<double, 3> final_steps{};
  double c = 0.0;
  ModelKind kind = BlockMaxima{};
  /// Blocks the likelihood was referenced to (m for threshold kinds).
  double n_blocks = 0.0;
  /// Blocks the data actually span; return periods are counted in these.
  double report_blocks = 0.0;

  std::size_t size() const { return rows.size(); }
  std::vector<double> column(double DrawRow::*field) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.*field);
    return out;
  }
};

namespace detail {

inline double log_gaussian(double x, double center, double variance) {
  return -0.5 * (x - center) * (x - center) / variance;
}

class PosteriorTarget {
 public:
  PosteriorTarget(TransformedSample& sample, const ModelKind& kind, double c,
                  const PriorSpec& priors, bool likelihood_enabled)
      : sample_(sample), kind_(kind), c_(c), priors_(priors), likelihood_(likelihood_enabled) {}

  double operator()(const std::array<double, 4>& s) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (s[3] < priors_.lambda_lo || s[3] > priors_.lambda_hi) return kNegInf;
    if (!(s[0] > 0.0) || !std::isfinite(s[1]) || !std::isfinite(s[2])) return kNegInf;
    const TransformedModel m(s[0], s[1], s[2], s[3], c_);
    if (!satisfies_constraints(m)) return kNegInf;
    double lp = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      lp += log_gaussian(s[i], priors_.gaussian_center[i], priors_.gaussian_variance);
    }
    if (likelihood_) lp += loglik4(sample_, kind_, m);
    return std::isnan(lp) ? kNegInf : lp;
  }

 private:
  TransformedSample& sample_;
  const ModelKind& kind_;
  double c_;
  const PriorSpec& priors_;
  bool likelihood_;
};

}  // namespace detail

/// The model kind the sampler's likelihood uses: threshold models are
/// referenced to one block per exceedance, which mixes better; draws convert
/// back to the data's block count afterwards.
inline ModelKind sampling_kind(const ModelKind& kind) {
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind)) {
    return ThresholdExceedances{pp->threshold, std::nullopt};
  }
  return kind;
}

/// Component-wise Metropolis-Hastings over (beta_X, log alpha_X, gamma_X,
/// lambda) at a fixed slope c.
inline PosteriorDraws run_mcmc(std::span<const double> data, const ModelKind& kind, double c,
                               const PriorSpec& priors, const SamplerConfig& cfg) {
  priors.validate();
  cfg.validate();
  if (!std::isfinite(c)) throw UsageError("run_mcmc: c must be finite");
  TransformedSample current_sample(data);
  TransformedSample proposal_sample(data);
  const ModelKind lik_kind = sampling_kind(kind);
  if (const auto* pp = std::get_if<ThresholdExceedances>(&lik_kind)) {
    for (double v : data) {
      if (!(v > pp->threshold)) {
        throw UsageError(detail::concat("run_mcmc: value ", v, " does not exceed threshold ",
                                        pp->threshold));
      }
    }
  }
  detail::PosteriorTarget target(current_sample, lik_kind, c, priors, cfg.likelihood_enabled);
  detail::PosteriorTarget proposal_target(proposal_sample, lik_kind, c, priors,
                                          cfg.likelihood_enabled);

  // starting state: supplied, prior center at lambda near 1, or a fit of the
  // transformed data at a lambda inside the prior range
  std::array<double, 4> state{};
  double log_post = -std::numeric_limits<double>::infinity();
  auto try_start = [&](const std::array<double, 4>& s) {
    const double v = target(s);
    if (std::isfinite(v)) {
      state = s;
      log_post = v;
      return true;
    }
    return false;
  };
  const double lambda_mid = std::clamp(1.0, priors.lambda_lo, priors.lambda_hi);
  bool started = cfg.initial_state && try_start(*cfg.initial_state);
  if (!started) {
    started = try_start({priors.gaussian_center[0], priors.gaussian_center[1],
                         priors.gaussian_center[2], lambda_mid});
  }
  for (int k = 0; !started && k <= 8; ++k) {
    const double l = k == 0 ? lambda_mid
                            : priors.lambda_lo + (priors.lambda_hi - priors.lambda_lo) * k / 8.0;
    const auto fit = detail::transformed_fit(data, lik_kind, l);
    if (!fit || !in_boxcox_range(fit->params.location, l)) continue;
    const double bx = inverse_boxcox(fit->params.location, l);
    if (!(bx > 0.0)) continue;
    started = try_start({bx, std::log(fit->params.scale) - (l - 1.0) * std::log(bx),
                         fit->params.shape - c * (l - 1.0), l});
  }
  if (!started) {
    throw NumericalError("run_mcmc: no starting state with finite posterior; revise the priors");
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> lambda_prop(priors.lambda_lo, priors.lambda_hi);
  auto accept = [&](double diff) { return diff >= 0.0 || std::log(unif(rng)) < diff; };

  std::array<double, 3> steps = cfg.step_scales;
  std::array<std::size_t, 4> accepted_total{};
  std::array<std::size_t, 4> accepted_burn{};
  std::array<std::size_t, 3> accepted_batch{};
  constexpr std::size_t kBatch = 50;
  const bool update_lambda = !priors.lambda_fixed();

  PosteriorDraws out;
  out.c = c;
  out.kind = lik_kind;
  out.n_blocks = is_threshold_kind(lik_kind)
                     ? std::get<ThresholdExceedances>(lik_kind).blocks_for(data.size())
                     : static_cast<double>(data.size());
  out.report_blocks = is_threshold_kind(kind)
                         ? std::get<ThresholdExceedances>(kind).blocks_for(data.size())
                         : out.n_blocks;
  out.rows.reserve(cfg.iterations);

  const std::size_t total = cfg.burn_in + cfg.iterations;
  for (std::size_t it = 0; it < total; ++it) {
    const bool burning = it < cfg.burn_in;
    for (std::size_t k = 0; k < 3; ++k) {
      std::array<double, 4> prop = state;
      prop[k] += steps[k] * normal(rng);
      const double lp = target(prop);
      if (std::isfinite(lp) && accept(lp - log_post)) {
        state = prop;
        log_post = lp;
        ++(burning ? accepted_burn[k] : accepted_total[k]);
        if (burning) ++accepted_batch[k];
      }
    }
    if (update_lambda) {
      std::array<double, 4> prop = state;
      prop[3] = lambda_prop(rng);
      const double lp = proposal_target(prop);
      // uniform independence proposal on the prior range: the proposal and
      // prior densities cancel in the acceptance ratio
      if (std::isfinite(lp) && accept(lp - log_post)) {
        state = prop;
        log_post = lp;
        std::swap(current_sample, proposal_sample);
        ++(burning ? accepted_burn[3] : accepted_total[3]);
      }
    }
    if (burning && cfg.adapt && (it + 1) % kBatch == 0) {
      for (std::size_t k = 0; k < 3; ++k) {
        const double rate = static_cast<double>(accepted_batch[k]) / kBatch;
        steps[k] *= std::exp(2.0 * (rate - 0.44));
        accepted_batch[k] = 0;
      }
    }
    if (burning && it + 1 == cfg.burn_in) {
      for (std::size_t k = 0; k < 4; ++k) {
        if (k == 3 && !update_lambda) continue;
        if (accepted_burn[k] == 0) {
          throw NumericalError(detail::concat("run_mcmc: no ", kSampledNames[k],
                                              " proposal accepted during burn-in; revise the "
                                              "step scales or the lambda prior range"));
        }
      }
    }
    if (!burning) {
      const TransformedModel m(state[0], state[1], state[2], state[3], c);
      const GevParams y = to_y_params(m);
      out.rows.push_back({state[0], state[1], state[2], state[3], y.location, y.scale, y.shape,
                          log_post});
    }
  }
  for (std::size_t k = 0; k < 4; ++k) {
    out.acceptance[k] = static_cast<double>(accepted_total[k]) / static_cast<double>(cfg.iterations);
  }
  if (!update_lambda) out.acceptance[3] = std::numeric_limits<double>::quiet_NaN();
  out.final_steps = steps;
  return out;
}

/// Effective sample size from the initial positive sequence of
/// autocorrelation pair sums.
inline double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return static_cast<double>(n);
  const double m = mean(x);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 1.0;
  double sum = 0.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (autocov(lag) + autocov(lag + 1)) / c0;
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n) / tau, static_cast<double>(n));
}

struct ComponentSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
  /// NaN for derived columns and for a pinned lambda.
  double acceptance = std::numeric_limits<double>::quiet_NaN();
};

struct ChainSummary {
  std::vector<ComponentSummary> components;
  std::vector<std::string> warnings;
};

inline ChainSummary chain_diagnostics(const PosteriorDraws& draws) {
  if (draws.rows.empty()) throw UsageError("chain_diagnostics: no draws");
  const std::array<std::pair<const char*, double DrawRow::*>, 7> cols{{
      {"beta_x", &DrawRow::beta_x},
      {"log_alpha_x", &DrawRow::log_alpha_x},
      {"gamma_x", &DrawRow::gamma_x},
      {"lambda", &DrawRow::lambda},
      {"beta_y", &DrawRow::beta_y},
      {"alpha_y", &DrawRow::alpha_y},
      {"gamma_y", &DrawRow::gamma_y},
  }};
  ChainSummary out;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    std::vector<double> v = draws.column(cols[k].second);
    ComponentSummary s;
    s.name = cols[k].first;
    s.mean = mean(v);
    s.sd = sample_sd(v);
    s.ess = effective_sample_size(v);
    if (k < 4) s.acceptance = draws.acceptance[k];
    std::sort(v.begin(), v.end());
    s.q025 = quantile_sorted(v, 0.025);
    s.q25 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q75 = quantile_sorted(v, 0.75);
    s.q975 = quantile_sorted(v, 0.975);
    const bool pinned = k == 3 && std::isnan(draws.acceptance[3]);
    if (pinned) {
      // lambda fixed by a degenerate prior range
    } else if (v.front() == v.back()) {
      out.warnings.push_back(s.name + ": chain is constant; effective sample size is not informative");
    } else if (s.ess < 100.0) {
      out.warnings.push_back(detail::concat(s.name, ": effective sample size only ", s.ess));
    }
    out.components.push_back(std::move(s));
  }
  return out;
}

/// Each draw mapped to the Y-scale GEV parameters, row for row.
inline std::vector<GevParams> posterior_for_original_params(const PosteriorDraws& draws) {
  std::vector<GevParams> out;
  out.reserve(draws.rows.size());
  for (const auto& r : draws.rows) out.push_back(to_y_params(r.model(draws.c)));
  return out;
}

}  // namespace evscale
