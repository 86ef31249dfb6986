#pragma once

// Parent laws F_X with closed-form reciprocal hazard h = (1 - F)/f and its
// derivative. The four example classes have their O-terms set to zero so they
// are concrete, sampleable distributions.

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

#include "evscale/error.hpp"
#include "evscale/gev.hpp"

namespace evscale {

/// Tail behaviour at the upper end point x^F.
struct TailLimits {
  /// xi_X = lim h'(x); empty when the limit does not exist.
  std::optional<double> shape;
  /// L = lim h(x)/x; empty when the limit does not exist.
  std::optional<double> ratio;
  /// Limiting shape of log X, for laws only attracted after a log transform.
  std::optional<double> log_scale_shape;
  /// False when the optimal-lambda sequence has no limit.
  bool lambda_star_converges = true;
};

template <class P>
concept ParentLaw = requires(const P& d, double x) {
  { d.survival(x) } -> std::convertible_to<double>;
  { d.pdf(x) } -> std::convertible_to<double>;
  { d.reciprocal_hazard(x) } -> std::convertible_to<double>;
  { d.reciprocal_hazard_derivative(x) } -> std::convertible_to<double>;
  { d.lower_endpoint() } -> std::convertible_to<double>;
  { d.upper_endpoint() } -> std::convertible_to<double>;
  { d.tail_limits() } -> std::same_as<TailLimits>;
  { d.table_lambda_star() } -> std::same_as<std::optional<double>>;
  { d.name() } -> std::convertible_to<std::string>;
};

/// Laws with a closed-form upper quantile x such that 1 - F(x) = tail_prob.
template <class P>
concept HasUpperQuantile = requires(const P& d, double t) {
  { d.upper_quantile(t) } -> std::convertible_to<double>;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Exponential {
 public:
  explicit Exponential(double rate = 1.0) : rate_(rate) {
    if (!(rate > 0.0)) throw DomainError(detail::concat("Exponential: rate ", rate));
  }
  double survival(double x) const { return x <= 0.0 ? 1.0 : std::exp(-rate_ * x); }
  double pdf(double x) const { return x < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * x); }
  double reciprocal_hazard(double) const { return 1.0 / rate_; }
  double reciprocal_hazard_derivative(double) const { return 0.0; }
  double upper_quantile(double t) const { return -std::log(t) / rate_; }
  double lower_endpoint() const { return 0.0; }
  double upper_endpoint() const { return kInf; }
  TailLimits tail_limits() const { return {0.0, 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return 1.0; }
  std::string name() const { return "exponential"; }

 private:
  double rate_;
};

/// Standard normal truncated at 0: F(x) = 2 Phi(x) - 1 on x > 0.
class TruncatedNormal {
 public:
  double survival(double x) const {
    return x <= 0.0 ? 1.0 : boost::math::erfc(x / std::numbers::sqrt2);
  }
  double pdf(double x) const {
    return x < 0.0 ? 0.0 : std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * x * x);
  }
  double reciprocal_hazard(double x) const { return survival(x) / pdf(x); }
  // d/dx (1-F)/f = -1 - h f'/f and f'/f = -x
  double reciprocal_hazard_derivative(double x) const { return -1.0 + x * reciprocal_hazard(x); }
  double upper_quantile(double t) const {
    return std::numbers::sqrt2 * boost::math::erfc_inv(t);
  }
  double lower_endpoint() const { return 0.0; }
  double upper_endpoint() const { return kInf; }
  TailLimits tail_limits() const { return {0.0, 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return 2.0; }
  std::string name() const { return "truncated_normal"; }
};

/// Weibull with survival exp{-(x/scale)^shape}.
class Weibull {
 public:
  Weibull(double shape, double scale = 1.0) : k_(shape), s_(scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
      throw DomainError(detail::concat("Weibull: shape ", shape, ", scale ", scale));
    }
  }
  double survival(double x) const { return x <= 0.0 ? 1.0 : std::exp(-std::pow(x / s_, k_)); }
  double pdf(double x) const {
    if (x <= 0.0) return 0.0;
    return (k_ / s_) * std::pow(x / s_, k_ - 1.0) * survival(x);
  }
  double reciprocal_hazard(double x) const { return (s_ / k_) * std::pow(x / s_, 1.0 - k_); }
  double reciprocal_hazard_derivative(double x) const {
    return ((1.0 - k_) / k_) * std::pow(x / s_, -k_);
  }
  double upper_quantile(double t) const { return s_ * std::pow(-std::log(t), 1.0 / k_); }
  double lower_endpoint() const { return 0.0; }
  double upper_endpoint() const { return kInf; }
  TailLimits tail_limits() const { return {0.0, 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return k_; }
  std::string name() const { return "weibull"; }

 private:
  double k_;
  double s_;
};

class Gamma {
 public:
  Gamma(double shape, double scale = 1.0) : k_(shape), theta_(scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
      throw DomainError(detail::concat("Gamma: shape ", shape, ", scale ", scale));
    }
  }
  double survival(double x) const {
    return x <= 0.0 ? 1.0 : boost::math::gamma_q(k_, x / theta_);
  }
  double pdf(double x) const {
    return x <= 0.0 ? 0.0 : boost::math::gamma_p_derivative(k_, x / theta_) / theta_;
  }
  double reciprocal_hazard(double x) const { return survival(x) / pdf(x); }
  // f'/f = (k-1)/x - 1/theta
  double reciprocal_hazard_derivative(double x) const {
    return -1.0 - reciprocal_hazard(x) * ((k_ - 1.0) / x - 1.0 / theta_);
  }
  double upper_quantile(double t) const { return theta_ * boost::math::gamma_q_inv(k_, t); }
  double lower_endpoint() const { return 0.0; }
  double upper_endpoint() const { return kInf; }
  TailLimits tail_limits() const { return {0.0, 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return 1.0; }
  std::string name() const { return "gamma"; }

 private:
  double k_;
  double theta_;
};

/// Heavy tail 1 - F(x) = C x^-alpha {1 + D x^-beta} above the point where it
/// reaches one (Frechet domain).
class ParetoTail {
 public:
  ParetoTail(double alpha, double beta = 1.0, double c = 1.0, double d = 0.0)
      : alpha_(alpha), beta_(beta), c_(c), d_(d) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(c > 0.0)) {
      throw DomainError(detail::concat("ParetoTail: alpha ", alpha, ", beta ", beta, ", C ", c));
    }
    x0_ = find_start();
  }
  double survival(double x) const {
    if (x <= x0_) return 1.0;
    return c_ * std::pow(x, -alpha_) * (1.0 + d_ * std::pow(x, -beta_));
  }
  double pdf(double x) const {
    if (x < x0_) return 0.0;
    return c_ * std::pow(x, -alpha_ - 1.0) *
           (alpha_ + d_ * (alpha_ + beta_) * std::pow(x, -beta_));
  }
  double reciprocal_hazard(double x) const {
    const double u = d_ * std::pow(x, -beta_);
    return x * (1.0 + u) / (alpha_ + (alpha_ + beta_) * u);
  }
  double reciprocal_hazard_derivative(double x) const {
    const double u = d_ * std::pow(x, -beta_);
    const double den = alpha_ + (alpha_ + beta_) * u;
    return (1.0 + u) / den + beta_ * beta_ * u / (den * den);
  }
  double lower_endpoint() const { return x0_; }
  double upper_endpoint() const { return kInf; }
  TailLimits tail_limits() const { return {1.0 / alpha_, 1.0 / alpha_, {}, true}; }
  std::optional<double> table_lambda_star() const { return beta_; }
  std::string name() const { return "pareto_tail"; }

  double alpha() const { return alpha_; }

 private:
  double find_start() const {
    if (d_ == 0.0) return std::pow(c_, 1.0 / alpha_);
    auto s = [&](double x) { return c_ * std::pow(x, -alpha_) * (1.0 + d_ * std::pow(x, -beta_)); };
    double lo = 1.0, hi = 1.0;
    while (s(hi) >= 1.0) hi *= 2.0;
    while (s(lo) < 1.0 && lo > 1e-300) lo *= 0.5;
    if (!(s(lo) >= 1.0)) throw DomainError("ParetoTail: survival never reaches one");
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (s(mid) >= 1.0 ? lo : hi) = mid;
    }
    const double x0 = hi;
    if (!(alpha_ + d_ * (alpha_ + beta_) * std::pow(x0, -beta_) > 0.0)) {
      throw DomainError("ParetoTail: survival is not monotone above its start point");
    }
    return x0;
  }

  double alpha_, beta_, c_, d_;
  double x0_ = 1.0;
};

/// Bounded tail 1 - F(x) = C (x^F - x)^alpha {1 + D (x^F - x)^beta}
/// (negative Weibull domain).
class BoundedTail {
 public:
  BoundedTail(double alpha, double beta, double c, double d, double upper)
      : alpha_(alpha), beta_(beta), c_(c), d_(d), upper_(upper) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(c > 0.0) || !std::isfinite(upper)) {
      throw DomainError(detail::concat("BoundedTail: alpha ", alpha, ", beta ", beta, ", C ", c));
    }
    w0_ = find_start_distance();
  }
  double survival(double x) const {
    const double w = upper_ - x;
    if (w >= w0_) return 1.0;
    if (w <= 0.0) return 0.0;
    return c_ * std::pow(w, alpha_) * (1.0 + d_ * std::pow(w, beta_));
  }
  double pdf(double x) const {
    const double w = upper_ - x;
    if (w > w0_ || w <= 0.0) return 0.0;
    return c_ * std::pow(w, alpha_ - 1.0) * (alpha_ + d_ * (alpha_ + beta_) * std::pow(w, beta_));
  }
  double reciprocal_hazard(double x) const {
    const double w = upper_ - x;
    const double v = d_ * std::pow(w, beta_);
    return w * (1.0 + v) / (alpha_ + (alpha_ + beta_) * v);
  }
  double reciprocal_hazard_derivative(double x) const {
    const double w = upper_ - x;
    const double v = d_ * std::pow(w, beta_);
    const double den = alpha_ + (alpha_ + beta_) * v;
    return -(1.0 + v) / den + beta_ * beta_ * v / (den * den);
  }
  double lower_endpoint() const { return upper_ - w0_; }
  double upper_endpoint() const { return upper_; }
  TailLimits tail_limits() const { return {-1.0 / alpha_, 0.0, {}, beta_ > 1.0}; }
  std::optional<double> table_lambda_star() const {
    if (beta_ > 1.0) return 1.0;
    return std::nullopt;
  }
  std::string name() const { return "bounded_tail"; }

 private:
  double find_start_distance() const {
    if (d_ == 0.0) return std::pow(c_, -1.0 / alpha_);
    auto s = [&](double w) { return c_ * std::pow(w, alpha_) * (1.0 + d_ * std::pow(w, beta_)); };
    double lo = 1.0, hi = 1.0;
    while (s(lo) >= 1.0 && lo > 1e-300) lo *= 0.5;
    while (s(hi) < 1.0 && hi < 1e300) hi *= 2.0;
    if (!(s(hi) >= 1.0)) throw DomainError("BoundedTail: survival never reaches one");
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (s(mid) >= 1.0 ? hi : lo) = mid;
    }
    return lo;
  }

  double alpha_, beta_, c_, d_, upper_;
  double w0_ = 1.0;
};

/// Hazard class with reciprocal hazard exactly C x^-alpha on x > 0, i.e.
/// survival exp{-x^(alpha+1) / (C (alpha+1))} (Gumbel domain).
class HazardPower {
 public:
  HazardPower(double alpha, double c = 1.0) : alpha_(alpha), c_(c) {
    if (!(alpha > -1.0) || !(c > 0.0)) {
      throw DomainError(detail::concat("HazardPower: alpha ", alpha, ", C ", c));
    }
  }
  double survival(double x) const {
    if (x <= 0.0) return 1.0;
    return std::exp(-std::pow(x, alpha_ + 1.0) / (c_ * (alpha_ + 1.0)));
  }
  double pdf(double x) const {
    if (x <= 0.0) return 0.0;
    return std::pow(x, alpha_) / c_ * survival(x);
  }
  double reciprocal_hazard(double x) const { return c_ * std::pow(x, -alpha_); }
  double reciprocal_hazard_derivative(double x) const {
    return -alpha_ * c_ * std::pow(x, -alpha_ - 1.0);
  }
  double upper_quantile(double t) const {
    return std::pow(-std::log(t) * c_ * (alpha_ + 1.0), 1.0 / (alpha_ + 1.0));
  }
  double lower_endpoint() const { return 0.0; }
  double upper_endpoint() const { return kInf; }
  TailLimits tail_limits() const { return {0.0, 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return alpha_ + 1.0; }
  std::string name() const { return "hazard_power"; }

 private:
  double alpha_, c_;
};

/// Log-Pareto 1 - F(x) = [1 + (gamma/beta)(log x - u)]_+^(-1/gamma), x >= e^u.
/// For gamma > 0 the law is super-heavy-tailed.
class LogPareto {
 public:
  LogPareto(double beta, double gamma, double u) : beta_(beta), gamma_(gamma), u_(u) {
    if (!(beta > 0.0)) throw DomainError(detail::concat("LogPareto: beta ", beta));
  }
  double survival(double x) const {
    if (x <= lower_endpoint()) return 1.0;
    const double s = (std::log(x) - u_) / beta_;
    if (detail::is_gumbel(gamma_)) return std::exp(-s);
    const double z = 1.0 + gamma_ * s;
    if (z <= 0.0) return 0.0;
    return std::exp(-std::log(z) / gamma_);
  }
  double pdf(double x) const {
    if (x < lower_endpoint() || x >= upper_endpoint()) return 0.0;
    return survival(x) / reciprocal_hazard(x);
  }
  double reciprocal_hazard(double x) const {
    return x * (beta_ + gamma_ * (std::log(x) - u_));
  }
  double reciprocal_hazard_derivative(double x) const {
    return beta_ + gamma_ * (std::log(x) - u_) + gamma_;
  }
  double upper_quantile(double t) const {
    const double lt = -std::log(t);
    if (detail::is_gumbel(gamma_)) return std::exp(u_ + beta_ * lt);
    return std::exp(u_ + beta_ * std::expm1(gamma_ * lt) / gamma_);
  }
  double lower_endpoint() const { return std::exp(u_); }
  double upper_endpoint() const {
    if (gamma_ < 0.0 && !detail::is_gumbel(gamma_)) return std::exp(u_ - beta_ / gamma_);
    return kInf;
  }
  TailLimits tail_limits() const {
    if (detail::is_gumbel(gamma_)) return {beta_, beta_, beta_, true};
    if (gamma_ < 0.0) return {gamma_, 0.0, gamma_, true};
    return {std::nullopt, std::nullopt, gamma_, true};
  }
  std::optional<double> table_lambda_star() const {
    if (detail::is_gumbel(gamma_)) return std::nullopt;
    return 0.0;
  }
  std::string name() const { return "log_pareto"; }

 private:
  double beta_, gamma_, u_;
};

/// Generalized Pareto on x >= 0: h(x) = scale + shape*x, so h' is constant
/// and the penultimate shape equals the limiting one at every level.
class GeneralizedPareto {
 public:
  GeneralizedPareto(double scale, double shape) : scale_(scale), shape_(shape) {
    if (!(scale > 0.0)) throw DomainError(detail::concat("GeneralizedPareto: scale ", scale));
  }
  double survival(double x) const {
    if (x <= 0.0) return 1.0;
    const double lt = detail::log_tail_term(x / scale_, shape_);
    return lt == -kInf ? 0.0 : std::exp(lt);
  }
  double pdf(double x) const {
    if (x < 0.0 || x >= upper_endpoint()) return 0.0;
    return survival(x) / reciprocal_hazard(x);
  }
  double reciprocal_hazard(double x) const { return scale_ + shape_ * x; }
  double reciprocal_hazard_derivative(double) const { return shape_; }
  double upper_quantile(double t) const {
    const double lt = -std::log(t);
    if (detail::is_gumbel(shape_)) return scale_ * lt;
    return scale_ * std::expm1(shape_ * lt) / shape_;
  }
  double lower_endpoint() const { return 0.0; }
  double upper_endpoint() const {
    return shape_ < 0.0 && !detail::is_gumbel(shape_) ? -scale_ / shape_ : kInf;
  }
  TailLimits tail_limits() const { return {shape_, shape_ > 0.0 ? shape_ : 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return std::nullopt; }
  std::string name() const { return "generalized_pareto"; }

 private:
  double scale_, shape_;
};

/// Exact GEV parent.
class GevParent {
 public:
  explicit GevParent(GevParams p) : p_(p) { require_valid(p, "GevParent"); }
  double survival(double x) const { return -std::expm1(-tail_term(x)); }
  double pdf(double x) const { return std::exp(gev_logpdf(x, p_)); }
  // With T = [1 + xi s]^(-1/xi): h = sigma (e^T - 1) / T^(1+xi)
  double reciprocal_hazard(double x) const {
    const double t = tail_term(x);
    return p_.scale * std::expm1(t) / std::pow(t, 1.0 + p_.shape);
  }
  double reciprocal_hazard_derivative(double x) const {
    const double t = tail_term(x);
    return (1.0 + p_.shape) * std::expm1(t) / t - std::exp(t);
  }
  double upper_quantile(double t) const {
    const double ly = std::log(-std::log1p(-t));
    if (detail::is_gumbel(p_.shape)) return p_.location - p_.scale * ly;
    return p_.location + p_.scale * std::expm1(-p_.shape * ly) / p_.shape;
  }
  double lower_endpoint() const {
    return p_.shape > 0.0 && !detail::is_gumbel(p_.shape) ? p_.location - p_.scale / p_.shape
                                                           : -kInf;
  }
  double upper_endpoint() const { return gev_upper_endpoint(p_); }
  TailLimits tail_limits() const { return {p_.shape, p_.shape > 0.0 ? p_.shape : 0.0, {}, true}; }
  std::optional<double> table_lambda_star() const { return std::nullopt; }
  std::string name() const { return "gev"; }

 private:
  double tail_term(double x) const {
    return std::exp(detail::log_tail_term((x - p_.location) / p_.scale, p_.shape));
  }
  GevParams p_;
};

using AnyParent = std::variant<Exponential, TruncatedNormal, Weibull, Gamma, ParetoTail,
                               BoundedTail, HazardPower, LogPareto, GeneralizedPareto, GevParent>;

static_assert(ParentLaw<Exponential> && ParentLaw<TruncatedNormal> && ParentLaw<Weibull> &&
              ParentLaw<Gamma> && ParentLaw<ParetoTail> && ParentLaw<BoundedTail> &&
              ParentLaw<HazardPower> && ParentLaw<LogPareto> && ParentLaw<GeneralizedPareto> &&
              ParentLaw<GevParent>);

}  // namespace evscale
