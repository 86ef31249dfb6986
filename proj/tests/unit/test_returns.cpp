#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "evscale/data.hpp"
#include "evscale/returns.hpp"

using namespace evscale;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DrawRow row_from_y(const GevParams& y, double lambda) {
  DrawRow r;
  r.lambda = lambda;
  r.beta_y = y.location;
  r.alpha_y = y.scale;
  r.gamma_y = y.shape;
  return r;
}

PosteriorDraws draws_of(const std::vector<std::pair<GevParams, double>>& states,
                        const ModelKind& kind = BlockMaxima{}) {
  PosteriorDraws d;
  d.kind = kind;
  d.n_blocks = 100.0;
  d.report_blocks = 100.0;
  for (const auto& [y, l] : states) d.rows.push_back(row_from_y(y, l));
  return d;
}

const std::vector<std::pair<GevParams, double>> kThree{
    {{10.0, 1.0, 0.1}, 1.0}, {{2.4, 0.3, -0.1}, 0.5}, {{11.5, 1.4, 0.0}, 1.0}};

}  // namespace

TEST_CASE("return level closed forms", "[returns]") {
  const double p = -std::expm1(-1.0);
  CHECK_THAT(return_level_y({0.0, 1.0, 0.0}, p), WithinAbs(0.0, 1e-15));
  CHECK_THAT(return_level({0.0, 1.0, 0.0}, 1.0, p), WithinAbs(1.0, 1e-15));

  // y = 2 at lambda = 0.5 inverts to x = (0.5 * 2 + 1)^2 = 4
  const double q = 0.01;
  const double ly = std::log(-std::log1p(-q));
  const GevParams two{2.0 + 0.3 * ly, 0.3, 0.0};
  CHECK_THAT(return_level_y(two, q), WithinAbs(2.0, 1e-14));
  CHECK_THAT(return_level(two, 0.5, q), WithinAbs(4.0, 1e-13));

  CHECK_THROWS_AS(return_level_y({0.0, 1.0, 0.0}, 0.0), DomainError);
  CHECK_THROWS_AS(return_level_y({0.0, 1.0, 0.0}, 1.0), DomainError);
  // a quantile below -1/lambda has no preimage
  CHECK_THROWS_AS(return_level({-5.0, 0.5, 0.0}, 0.5, 0.5), DomainError);
}

TEST_CASE("lambda = 1 return levels are shifted GEV quantiles", "[returns]") {
  std::mt19937_64 rng(111);
  std::uniform_real_distribution<double> loc(3.0, 20.0), lsc(-1.0, 0.5), shp(-0.4, 0.4),
      lp(std::log(1e-4), std::log(0.5));
  for (int i = 0; i < 500; ++i) {
    const GevParams y{loc(rng), std::exp(lsc(rng)), shp(rng)};
    const double p = std::exp(lp(rng));
    const double x = return_level(y, 1.0, p);
    CHECK_THAT(x, WithinAbs(gev_quantile(1.0 - p, y) + 1.0, 1e-12 * std::max(1.0, std::fabs(x))));
    CHECK_THAT(return_level(TransformedModel(y.location + 1.0, std::log(y.scale), y.shape, 1.0,
                                             0.4),
                            p),
               WithinAbs(x, 1e-12 * std::max(1.0, std::fabs(x))));
  }
}

TEST_CASE("return levels increase with the return period", "[returns]") {
  for (const auto& [y, l] : kThree) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : {2.0, 5.0, 10.0, 50.0, 100.0, 1000.0, 1e4}) {
      const double x = return_level(y, l, 1.0 / t);
      CHECK(x > prev);
      prev = x;
    }
  }
  const PosteriorDraws d = draws_of(kThree);
  const ReturnLevelSummary a = posterior_return_levels(d, 0.1);
  const ReturnLevelSummary b = posterior_return_levels(d, 0.01);
  CHECK(b.median >= a.median);
  CHECK(b.lo >= a.lo);
  CHECK(b.hi >= a.hi);
}

TEST_CASE("posterior summaries of a degenerate posterior", "[returns]") {
  const GevParams y{3.0, 0.8, -0.1};
  const PosteriorDraws d = draws_of(std::vector(50, std::pair{y, 0.5}));
  const double x = return_level(y, 0.5, 0.01);
  const ReturnLevelSummary s = posterior_return_levels(d, 0.01);
  CHECK(s.median == x);
  CHECK(s.lo == x);
  CHECK(s.hi == x);
  CHECK(s.return_period == 100.0);
  CHECK_THAT(predictive_return_level(d, 0.01), WithinRel(x, 1e-8));
}

TEST_CASE("three-draw posterior against enumeration", "[returns]") {
  const PosteriorDraws d = draws_of(kThree);
  const double p = 0.02;
  std::vector<double> v;
  for (const auto& [y, l] : kThree) v.push_back(return_level(y, l, p));
  std::sort(v.begin(), v.end());
  // type-7 quantiles of three values: position 2q between order statistics
  const ReturnLevelSummary s = posterior_return_levels(d, p);
  CHECK(s.median == v[1]);
  CHECK_THAT(s.lo, WithinRel(v[0] + 0.05 * (v[1] - v[0]), 1e-14));
  CHECK_THAT(s.hi, WithinRel(v[1] + 0.95 * (v[2] - v[1]), 1e-14));
  CHECK(s.lo <= s.median);
  CHECK(s.median <= s.hi);

  // predictive level against a 10^6-point scan of the averaged survival
  const double xhat = predictive_return_level(d, p);
  CHECK(xhat >= v.front());
  CHECK(xhat <= v.back());
  const double lo = v.front(), hi = v.back();
  const int n = 1000000;
  double scan = hi;
  for (int k = 0; k <= n; ++k) {
    const double x = lo + (hi - lo) * k / n;
    double s_avg = 0.0;
    for (const auto& [y, l] : kThree) s_avg += 1.0 - gev_cdf(boxcox(x, l), y);
    if (s_avg / 3.0 <= p) {
      scan = x;
      break;
    }
  }
  CHECK(std::fabs(xhat - scan) <= (hi - lo) / n + 1e-8 * xhat);

  const auto table = return_level_table(d, std::vector<double>{10.0, 100.0});
  REQUIRE(table.size() == 2);
  CHECK(table[1].predictive > table[0].predictive);
  CHECK_THROWS_AS(return_level_table(d, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("threshold draws report per data block", "[returns]") {
  // draws referenced to one block per exceedance (200) over 50 data blocks
  PosteriorDraws d = draws_of({{{12.0, 2.0, 0.1}, 1.0}}, ThresholdExceedances{13.0, std::nullopt});
  d.n_blocks = 200.0;
  d.report_blocks = 50.0;
  const double p = 0.01;
  const double x = posterior_return_levels(d, p).median;
  // P(block max > x) = 1 - exp(-Lambda(x) / 50) with Lambda the intensity
  // over the whole record
  const double lambda_total = pp_intensity_above(x - 1.0, {{12.0, 2.0, 0.1}, 200.0});
  CHECK_THAT(-std::expm1(-lambda_total / 50.0), WithinRel(p, 1e-10));
}

TEST_CASE("QQ data for block maxima", "[returns]") {
  const GevParams y{4.0, 0.7, -0.15};
  const double lambda = 0.6;
  const PosteriorDraws exact = draws_of(std::vector(20, std::pair{y, lambda}));
  // data equal to the fitted quantiles at i/(m+1) lie on the identity line
  std::vector<double> data;
  for (int i = 1; i <= 30; ++i) {
    data.push_back(inverse_boxcox(gev_quantile(i / 31.0, y), lambda));
  }
  const auto qq = qq_data(exact, data);
  REQUIRE(qq.size() == 30);
  for (const auto& q : qq) CHECK_THAT(q.fitted_median, WithinRel(q.empirical, 1e-10));

  const auto band = qq_data(draws_of(kThree), data);
  for (const auto& q : band) {
    CHECK(q.lo <= q.fitted_median);
    CHECK(q.fitted_median <= q.hi);
  }
  std::vector<double> unsorted{2.0, 1.0};
  CHECK_THROWS_AS(qq_data(exact, unsorted), UsageError);
}

TEST_CASE("QQ data for exceedances uses the conditional law", "[returns]") {
  const GevParams y{12.0, 2.0, 0.15};
  const double u = 14.0;
  PosteriorDraws d = draws_of({{y, 1.0}}, ThresholdExceedances{u, std::nullopt});
  for (double q : {0.1, 0.5, 0.9, 0.99}) {
    const double x = model_quantile(y, 1.0, d.kind, q);
    // Lambda(x)/Lambda(u) = 1 - q whatever the block reference
    const double ratio = pp_intensity_above(x - 1.0, {y, 7.0}) / pp_intensity_above(u - 1.0, {y, 7.0});
    CHECK_THAT(ratio, WithinAbs(1.0 - q, 1e-12));
    CHECK(x > u);
  }
  // Gumbel: exponential excesses on the Y scale
  const GevParams g{12.0, 2.0, 0.0};
  CHECK_THAT(model_quantile(g, 1.0, d.kind, 0.5), WithinRel(u + 2.0 * std::log(2.0), 1e-14));
}

TEST_CASE("QQ points fall in the band for a fitted posterior", "[returns]") {
  const GevParams truth{15.0, 1.5, -0.25};
  std::vector<double> x = simulate_gev(truth, 200, 121).values;
  const Fit3Result f = fit3_mle(x, BlockMaxima{});
  SamplerConfig cfg;
  cfg.iterations = 4000;
  cfg.burn_in = 1000;
  cfg.seed = 123;
  cfg.step_scales = steps_from_fit(f);
  const PosteriorDraws d = run_mcmc(x, BlockMaxima{}, 0.0, prior_from_fit(f, 1.0, 1.0), cfg);
  std::sort(x.begin(), x.end());
  const auto qq = qq_data(d, x);
  std::size_t inside = 0;
  for (const auto& q : qq) {
    if (q.lo <= q.empirical && q.empirical <= q.hi) ++inside;
  }
  INFO(inside << " of " << qq.size() << " inside the band");
  CHECK(static_cast<double>(inside) >= 0.9 * static_cast<double>(qq.size()));
}
