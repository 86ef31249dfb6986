#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "evscale/data.hpp"
#include "evscale/model.hpp"

using namespace evscale;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Direct transcription of the GEV density, independent of the library's
// log_tail_term helper.
double naive_gev_loglik(const std::vector<double>& x, double mu, double sigma, double xi) {
  double s = 0.0;
  for (double v : x) {
    const double t = 1.0 + xi * (v - mu) / sigma;
    if (t <= 0.0) return kNegInf;
    const double f = (1.0 / sigma) * std::pow(t, -1.0 / xi - 1.0) * std::exp(-std::pow(t, -1.0 / xi));
    s += std::log(f);
  }
  return s;
}

double naive_pp_loglik(const std::vector<double>& x, double u, double nb, double mu, double sigma,
                       double xi) {
  const double tu = 1.0 + xi * (u - mu) / sigma;
  double s = -nb * std::pow(tu, -1.0 / xi);
  for (double v : x) {
    const double t = 1.0 + xi * (v - mu) / sigma;
    s += std::log(std::pow(t, -1.0 / xi - 1.0) / sigma);
  }
  return s;
}

}  // namespace

TEST_CASE("to_y_params substitution examples", "[model]") {
  const GevParams one = to_y_params(TransformedModel(7.0, std::log(2.0), -0.3, 1.0, 0.4));
  CHECK(one.location == 6.0);
  CHECK_THAT(one.scale, WithinRel(2.0, 1e-15));
  CHECK(one.shape == -0.3);

  const GevParams half = to_y_params(TransformedModel(4.0, 0.0, 0.1, 0.5, 0.2));
  CHECK_THAT(half.location, WithinAbs(2.0, 1e-15));
  CHECK_THAT(half.scale, WithinAbs(0.5, 1e-15));
  CHECK_THAT(half.shape, WithinAbs(0.0, 1e-16));

  const GevParams wave = to_y_params(TransformedModel(10.0, 0.0, -0.12, 2.0, 0.23));
  CHECK_THAT(wave.shape, WithinAbs(0.11, 1e-16));
  CHECK_THROWS_AS(to_y_params(TransformedModel(-1.0, 0.0, 0.0, 0.5, 0.0)), DomainError);
}

TEST_CASE("constraints for negative lambda", "[model]") {
  // gamma_Y >= 0 is infeasible when lambda < 0
  CHECK_FALSE(satisfies_constraints(TransformedModel(5.0, 0.0, 0.2, -0.5, 0.1)));
  // finite upper end point must sit inside the Box-Cox image (< -1/lambda = 2)
  const TransformedModel ok(2.0, std::log(0.05), -0.3, -0.5, 0.0);
  const GevParams y = to_y_params(ok);
  REQUIRE(y.location - y.scale / y.shape <= 2.0);
  CHECK(satisfies_constraints(ok));
  const TransformedModel wide(2.0, std::log(5.0), -0.3, -0.5, 0.0);
  CHECK_FALSE(satisfies_constraints(wide));
  CHECK(satisfies_constraints(TransformedModel(5.0, 0.0, 0.2, 1.5, 0.1)));
  CHECK_FALSE(satisfies_constraints(TransformedModel(0.0, 0.0, 0.2, 1.5, 0.1)));
}

TEST_CASE("loglik_gev3 matches a naive per-point oracle", "[model]") {
  CHECK_THAT(loglik_gev3(std::vector<double>{0.0}, {0.0, 1.0, 0.0}), WithinAbs(-1.0, 1e-15));
  const std::vector<double> x = simulate_gev({15.0, 1.5, -0.25}, 1000, 9).values;
  CHECK_THAT(loglik_gev3(x, {15.0, 1.5, -0.25}),
             WithinRel(naive_gev_loglik(x, 15.0, 1.5, -0.25), 1e-10));
  CHECK_THAT(loglik_gev3(x, {15.2, 1.3, -0.2}),
             WithinRel(naive_gev_loglik(x, 15.2, 1.3, -0.2), 1e-10));
  // a point beyond the fitted upper end point
  std::vector<double> y = x;
  y.push_back(15.0 + 1.5 / 0.25 + 0.1);
  CHECK(loglik_gev3(y, {15.0, 1.5, -0.25}) == kNegInf);
  CHECK(loglik_gev3(x, {15.0, -1.0, 0.1}) == kNegInf);
  CHECK_THROWS_AS(loglik_gev3(std::vector<double>{}, {0.0, 1.0, 0.0}), UsageError);
}

TEST_CASE("loglik_pp3 matches an oracle and its edge cases", "[model]") {
  // [1 + gamma(u - beta)/alpha] = 1 with no exceedances leaves -N_B
  CHECK_THAT(loglik_pp3(std::vector<double>{}, 3.0, 1.0, {3.0, 2.0, 0.4}),
             WithinAbs(-1.0, 1e-15));
  const ExceedanceSet sim = simulate_pp({{15.0, 1.5, -0.25}, 1000.0}, 5e4, 10);
  const double u = sim.threshold;
  CHECK_THAT(loglik3(sim.exceedances, ThresholdExceedances{u, 1000.0}, {15.0, 1.5, -0.25}),
             WithinRel(naive_pp_loglik(sim.exceedances, u, 1000.0, 15.0, 1.5, -0.25), 1e-10));
  // threshold above the implied end point
  CHECK(loglik_pp3(std::vector<double>{}, 30.0, 10.0, {15.0, 1.5, -0.25}) == kNegInf);
  // default N_B is the number of exceedances
  const std::vector<double> few{21.0, 22.5, 25.0};
  CHECK(loglik3(few, ThresholdExceedances{20.0, std::nullopt}, {20.0, 3.0, 0.1}) ==
        loglik_pp3(few, 20.0, 3.0, {20.0, 3.0, 0.1}));
  CHECK_THROWS_AS(loglik_pp3(few, 22.0, 3.0, {20.0, 3.0, 0.1}), UsageError);
}

TEST_CASE("PP likelihood is invariant under the N_B conversion", "[model]") {
  const ExceedanceSet sim = simulate_pp({{15.0, 1.5, -0.25}, 1000.0}, 2e4, 11);
  const PpParams p{{15.1, 1.45, -0.22}, 1000.0};
  const PpParams q = convert_pp_nblocks(p, static_cast<double>(sim.exceedances.size()));
  const double a = loglik3(sim.exceedances, ThresholdExceedances{sim.threshold, 1000.0}, p.gev);
  const double b = loglik3(sim.exceedances, ThresholdExceedances{sim.threshold, std::nullopt}, q.gev);
  // the intensity density is N_B (1/alpha) t^(-1/gamma - 1) and both
  // parameterizations imply the same one; the coded likelihood omits the
  // constant m log N_B, so the two differ by m log(m / 1000)
  const double m = static_cast<double>(sim.exceedances.size());
  CHECK_THAT(a - b, WithinAbs(m * std::log(m / 1000.0), 1e-8 * std::fabs(a)));
  // intensity on rectangles (u', inf) x (0, 1)
  for (double level : {9.0, 12.0, 15.0, 18.0, 20.5}) {
    CHECK_THAT(pp_intensity_above(level, q), WithinRel(pp_intensity_above(level, p), 1e-12));
  }
}

TEST_CASE("loglik4 at lambda = 1 reduces to loglik3", "[model]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  const std::vector<double> x = simulate_gev({15.0, 1.5, -0.25}, 300, 13).values;
  for (int i = 0; i < 20; ++i) {
    const TransformedModel m(15.0 + 0.3 * c(rng), std::log(1.5) + 0.1 * c(rng),
                             -0.25 + 0.05 * c(rng), 1.0, c(rng));
    const GevParams y = to_y_params(m);
    const GevParams shifted{y.location + 1.0, y.scale, y.shape};
    CHECK_THAT(loglik4(x, BlockMaxima{}, m), WithinRel(loglik3(x, BlockMaxima{}, shifted), 1e-12));
  }
}

TEST_CASE("loglik4 on squared data equals loglik3 on the original plus the Jacobian", "[model]") {
  // Y = X^2 and lambda = 1/2 gives boxcox(Y) = 2(X - 1): an affine map of X
  const std::vector<double> x = simulate_gev({15.0, 1.5, -0.25}, 500, 14).values;
  std::vector<double> sq;
  double sum_log = 0.0;
  for (double v : x) {
    sq.push_back(v * v);
    sum_log += std::log(v * v);
  }
  const double beta_y = 2.0 * (15.0 - 1.0), alpha_y = 3.0;
  // invert the reparameterization to hit (beta_Y, alpha_Y, gamma_Y) exactly
  const double beta_x = std::pow(0.5 * beta_y + 1.0, 2.0);
  const TransformedModel m(beta_x, std::log(alpha_y) + 0.5 * std::log(beta_x), -0.25, 0.5, 0.0);
  const GevParams y = to_y_params(m);
  REQUIRE_THAT(y.location, WithinRel(beta_y, 1e-14));
  REQUIRE_THAT(y.scale, WithinRel(alpha_y, 1e-14));
  // log f_Y(y) = log f_X(x) - log 2 for y = 2(x - 1), then the Box-Cox Jacobian
  const double expected = naive_gev_loglik(x, 15.0, 1.5, -0.25) -
                          static_cast<double>(x.size()) * std::log(2.0) - 0.5 * sum_log;
  CHECK_THAT(loglik4(sq, BlockMaxima{}, m), WithinRel(expected, 1e-10));
  // and the same through the threshold form
  const double u = 12.0;
  std::vector<double> xe, ye;
  for (double v : x) {
    if (v > u) {
      xe.push_back(v);
      ye.push_back(v * v);
    }
  }
  double ye_log = 0.0;
  for (double v : ye) ye_log += std::log(v);
  const double pp_expected = naive_pp_loglik(xe, u, 40.0, 15.0, 1.5, -0.25) -
                             static_cast<double>(xe.size()) * std::log(2.0) - 0.5 * ye_log;
  CHECK_THAT(loglik4(ye, ThresholdExceedances{u * u, 40.0}, m), WithinRel(pp_expected, 1e-10));
}

TEST_CASE("loglik4 rejects infeasible states and bad data", "[model]") {
  const std::vector<double> x{2.0, 3.0, 4.0};
  CHECK(loglik4(x, BlockMaxima{}, TransformedModel(3.0, 0.0, 0.2, -0.5, 0.1)) == kNegInf);
  const std::vector<double> bad{2.0, 0.0};
  CHECK_THROWS_AS(loglik4(bad, BlockMaxima{}, TransformedModel(3.0, 0.0, 0.2, 1.0, 0.1)),
                  DomainError);
  CHECK_THROWS_AS(loglik4(x, ThresholdExceedances{-1.0, 3.0},
                          TransformedModel(3.0, 0.0, 0.2, 1.0, 0.1)),
                  DomainError);
}

TEST_CASE("the transformed density integrates to the right mass", "[model]") {
  // f_X(x) = f_Y(boxcox(x)) x^(lambda-1); integrate over an interval of x
  const TransformedModel m(3.0, std::log(0.4), 0.1, 0.4, 0.2);
  const GevParams y = to_y_params(m);
  auto fx = [&](double v) {
    return std::exp(loglik4(std::vector<double>{v}, BlockMaxima{}, m));
  };
  const double a = 2.0, b = 6.0;
  const double mass =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(fx, a, b, 15, 1e-12);
  const double expected = gev_cdf(boxcox(b, 0.4), y) - gev_cdf(boxcox(a, 0.4), y);
  CHECK_THAT(mass, WithinAbs(expected, 1e-6));
}

TEST_CASE("TransformedSample caches per lambda", "[model]") {
  const std::vector<double> x{1.5, 2.5, 4.0};
  TransformedSample s(x);
  const auto a = s.transformed(0.5);
  CHECK_THAT(a[2], WithinAbs(2.0, 1e-15));
  const auto b = s.transformed(2.0);
  CHECK_THAT(b[0], WithinAbs(0.625, 1e-15));
  CHECK_THAT(s.log_jacobian(0.0), WithinRel(-(std::log(1.5) + std::log(2.5) + std::log(4.0)), 1e-15));
}
