#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "evscale/boxcox.hpp"
#include "evscale/error.hpp"
#include "evscale/gev.hpp"

namespace evscale {

struct BlockMaxima {};

/// Exceedances of a positive threshold. When n_blocks is empty the model is
/// referenced to one block per exceedance (N_B = m).
struct ThresholdExceedances {
  double threshold = 0.0;
  std::optional<double> n_blocks;

  double blocks_for(std::size_t m) const {
    return n_blocks ? *n_blocks : static_cast<double>(m);
  }
};

using ModelKind = std::variant<BlockMaxima, ThresholdExceedances>;

inline bool is_threshold_kind(const ModelKind& kind) {
  return std::holds_alternative<ThresholdExceedances>(kind);
}

/// Four-parameter model carried as {beta_X, log alpha_X, gamma_X, lambda},
/// with the shape slope c fixed when the model is built.
class TransformedModel {
 public:
  TransformedModel(double beta_x, double log_alpha_x, double gamma_x, double lambda,
                   double slope_c)
      : beta_x_(beta_x),
        log_alpha_x_(log_alpha_x),
        gamma_x_(gamma_x),
        lambda_(lambda),
        slope_c_(slope_c) {}

  TransformedModel(const std::array<double, 4>& state, double slope_c)
      : TransformedModel(state[0], state[1], state[2], state[3], slope_c) {}

  double beta_x() const { return beta_x_; }
  double log_alpha_x() const { return log_alpha_x_; }
  double alpha_x() const { return std::exp(log_alpha_x_); }
  double gamma_x() const { return gamma_x_; }
  double lambda() const { return lambda_; }
  double slope_c() const { return slope_c_; }

  std::array<double, 4> state() const { return {beta_x_, log_alpha_x_, gamma_x_, lambda_}; }
  TransformedModel with_state(const std::array<double, 4>& s) const {
    return {s, slope_c_};
  }

 private:
  double beta_x_;
  double log_alpha_x_;
  double gamma_x_;
  double lambda_;
  double slope_c_;
};

/// Y-scale GEV/PP parameters:
///   beta_Y = (beta_X^lambda - 1)/lambda
///   log alpha_Y = (lambda - 1) log beta_X + log alpha_X
///   gamma_Y = gamma_X + c (lambda - 1)
inline GevParams to_y_params(const TransformedModel& m) {
  if (!(m.beta_x() > 0.0)) {
    throw DomainError(detail::concat("to_y_params: beta_X must be positive, got ", m.beta_x()));
  }
  const double lm1 = m.lambda() - 1.0;
  return {boxcox(m.beta_x(), m.lambda()), std::exp(lm1 * std::log(m.beta_x()) + m.log_alpha_x()),
          m.gamma_x() + m.slope_c() * lm1};
}

/// Parameter-space constraints of the four-parameter model: beta_X > 0, and
/// for lambda < 0 a negative Y shape with end point at most -1/lambda.
inline bool satisfies_constraints(const TransformedModel& m) {
  if (!(m.beta_x() > 0.0) || !std::isfinite(m.log_alpha_x()) || !std::isfinite(m.gamma_x()) ||
      !std::isfinite(m.lambda())) {
    return false;
  }
  if (m.lambda() < 0.0 && std::fabs(m.lambda()) >= kBoxCoxLogSwitch) {
    const GevParams y = to_y_params(m);
    if (!(y.shape < 0.0)) return false;
    if (!(y.location - y.scale / y.shape <= -1.0 / m.lambda())) return false;
  }
  return true;
}

namespace detail {

inline void require_nonempty(std::span<const double> data, const char* where) {
  if (data.empty()) throw UsageError(detail::concat(where, ": empty data"));
}

}  // namespace detail

/// GEV log-likelihood; -inf if any point falls outside the support.
inline double loglik_gev3(std::span<const double> data, const GevParams& p) {
  detail::require_nonempty(data, "loglik_gev3");
  if (!p.valid()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double x : data) {
    const double l = gev_logpdf(x, p);
    if (l == -std::numeric_limits<double>::infinity()) return l;
    sum += l;
  }
  return sum;
}

/// Point-process log-likelihood for exceedances of u over n_blocks blocks:
///   -N_B [1 + gamma(u - beta)/alpha]_+^(-1/gamma)
///     + sum log{ (1/alpha) [1 + gamma(x_i - beta)/alpha]^(-1/gamma - 1) }.
/// An empty exceedance set is allowed (pure survival term).
inline double loglik_pp3(std::span<const double> data, double threshold, double n_blocks,
                         const GevParams& p) {
  if (!(n_blocks > 0.0)) {
    throw UsageError(detail::concat("loglik_pp3: n_blocks must be positive, got ", n_blocks));
  }
  for (double x : data) {
    if (!(x > threshold)) {
      throw UsageError(detail::concat("loglik_pp3: value ", x, " does not exceed threshold ",
                                      threshold));
    }
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!p.valid()) return kNegInf;
  const double lt_u = detail::log_tail_term((threshold - p.location) / p.scale, p.shape);
  if (!std::isfinite(lt_u)) return kNegInf;
  double sum = -n_blocks * std::exp(lt_u);
  const double log_scale = std::log(p.scale);
  const bool gumbel = detail::is_gumbel(p.shape);
  for (double x : data) {
    const double s = (x - p.location) / p.scale;
    if (gumbel) {
      sum += -log_scale - s;
      continue;
    }
    const double z = p.shape * s;
    if (!(z > -1.0)) return kNegInf;
    sum += -log_scale - (1.0 / p.shape + 1.0) * std::log1p(z);
  }
  return sum;
}

/// Box-Cox transformed sample with its log-Jacobian ingredients, reusable
/// across likelihood evaluations that share lambda.
class TransformedSample {
 public:
  explicit TransformedSample(std::span<const double> data)
      : data_(data.begin(), data.end()) {
    detail::require_nonempty(data, "TransformedSample");
    for (double x : data_) {
      if (!(x > 0.0)) {
        throw DomainError(detail::concat("data must be positive for Box-Cox, got ", x));
      }
      sum_log_ += std::log(x);
    }
    transformed_.resize(data_.size());
  }

  std::span<const double> original() const { return data_; }
  std::size_t size() const { return data_.size(); }
  double sum_log() const { return sum_log_; }

  /// Transformed values for lambda (recomputed only when lambda changes).
  std::span<const double> transformed(double lambda) {
    if (!cached_ || lambda != lambda_) {
      for (std::size_t i = 0; i < data_.size(); ++i) transformed_[i] = boxcox(data_[i], lambda);
      lambda_ = lambda;
      cached_ = true;
    }
    return transformed_;
  }

  double log_jacobian(double lambda) const { return (lambda - 1.0) * sum_log_; }

 private:
  std::vector<double> data_;
  std::vector<double> transformed_;
  double sum_log_ = 0.0;
  double lambda_ = 0.0;
  bool cached_ = false;
};

/// Four-parameter log-likelihood on a cached transformed sample.
inline double loglik4(TransformedSample& sample, const ModelKind& kind,
                      const TransformedModel& m) {
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind); pp && !(pp->threshold > 0.0)) {
    throw DomainError(detail::concat("loglik4: threshold must be positive, got ", pp->threshold));
  }
  if (!satisfies_constraints(m)) return -std::numeric_limits<double>::infinity();
  const GevParams y_params = to_y_params(m);
  const auto y = sample.transformed(m.lambda());
  const double jac = sample.log_jacobian(m.lambda());
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind)) {
    const double u_y = boxcox(pp->threshold, m.lambda());
    return loglik_pp3(y, u_y, pp->blocks_for(sample.size()), y_params) + jac;
  }
  return loglik_gev3(y, y_params) + jac;
}

/// Four-parameter log-likelihood: the 3-parameter likelihood of the Box-Cox
/// transformed data (and threshold) plus the Jacobian sum (lambda-1) sum log x.
inline double loglik4(std::span<const double> data, const ModelKind& kind,
                      const TransformedModel& m) {
  TransformedSample sample(data);
  return loglik4(sample, kind, m);
}

/// Three-parameter log-likelihood for either model kind.
inline double loglik3(std::span<const double> data, const ModelKind& kind, const GevParams& p) {
  if (const auto* pp = std::get_if<ThresholdExceedances>(&kind)) {
    return loglik_pp3(data, pp->threshold, pp->blocks_for(data.size()), p);
  }
  return loglik_gev3(data, p);
}

}  // namespace evscale
