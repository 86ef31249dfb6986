#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "evscale/asymptotics.hpp"
#include "evscale/stats.hpp"

using namespace evscale;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<AnyParent> all_families() {
  return {Exponential(1.5),
          TruncatedNormal{},
          Weibull(0.7, 2.0),
          Gamma(2.5, 1.2),
          ParetoTail(2.0, 1.0, 1.0, 0.5),
          BoundedTail(2.0, 2.0, 1.0, 0.5, 3.0),
          HazardPower(0.5, 1.0),
          LogPareto(0.4, 0.0, 0.0),
          GeneralizedPareto(1.0, 0.2),
          GevParent(GevParams{5.0, 1.0, -0.2})};
}

// h_Y(y) from the transformed survival and density alone:
// f_Y(y) = f_X(x) x^(1 - lambda) at x = inverse_boxcox(y).
template <class P>
double hazard_y_from_density(const P& d, double y, double lambda) {
  const double x = inverse_boxcox(y, lambda);
  return d.survival(x) / (d.pdf(x) * std::pow(x, 1.0 - lambda));
}

}  // namespace

TEST_CASE("norming constants for closed-form families", "[asymptotics]") {
  const NormingTriple e = norming_constants(Exponential(1.0), 100.0);
  CHECK_THAT(e.b, WithinRel(std::log(100.0), 1e-12));
  CHECK_THAT(e.a, WithinRel(1.0, 1e-15));
  CHECK(e.xi_pen == 0.0);

  const NormingTriple p = norming_constants(ParetoTail(2.0), 1e4);
  CHECK_THAT(p.b, WithinRel(100.0, 1e-10));
  CHECK_THAT(p.a, WithinRel(50.0, 1e-10));
  CHECK_THAT(p.xi_pen, WithinAbs(0.5, 1e-12));

  const NormingTriple t = norming_constants(TruncatedNormal{}, 100.0);
  CHECK(std::fabs(t.b - 2.6) <= 0.05);
  CHECK_THROWS_AS(norming_constants(Exponential(1.0), 1.0), DomainError);
}

TEST_CASE("norming constants satisfy their defining equations", "[asymptotics]") {
  for (const AnyParent& family : all_families()) {
    std::visit(
        [](const auto& d) {
          for (double n : {10.0, 1e3, 1e5}) {
            const NormingTriple t = norming_constants(d, n);
            CHECK_THAT(d.survival(t.b), WithinRel(1.0 / n, 1e-9));
            CHECK_THAT(t.a, WithinRel(d.survival(t.b) / d.pdf(t.b), 1e-9));
          }
        },
        family);
  }
}

TEST_CASE("transform_norming substitution", "[asymptotics]") {
  const NormingTriple x{10.0, 1.0, 0.0, 100.0};
  const NormingTriple one = transform_norming(x, 1.0);
  CHECK(one.b == 9.0);
  CHECK(one.a == 1.0);
  const NormingTriple two = transform_norming(x, 2.0);
  CHECK_THAT(two.b, WithinRel(49.5, 1e-15));
  CHECK_THAT(two.a, WithinRel(10.0, 1e-15));
  CHECK_THAT(two.xi_pen, WithinAbs(0.1, 1e-15));
  const NormingTriple three = transform_norming({10.0, 2.0, 0.0, 100.0}, 2.0);
  CHECK_THAT(three.a, WithinRel(20.0, 1e-15));
  CHECK_THROWS_AS(transform_norming({-1.0, 1.0, 0.0, 10.0}, 2.0), DomainError);
}

TEST_CASE("penultimate Y shape", "[asymptotics]") {
  CHECK(penultimate_shape_y(Exponential(1.0), 100.0, 1.0) == 0.0);
  CHECK_THAT(penultimate_shape_y(Exponential(1.0), 100.0, 2.0),
             WithinAbs(1.0 / std::log(100.0), 1e-12));
  CHECK_THAT(1.0 / std::log(100.0), WithinAbs(0.2171, 1e-4));

  // direct hazard calculus on the transformed law at b_Y
  const TruncatedNormal tn;
  const NormingTriple y = transform_norming(norming_constants(tn, 100.0), 2.0);
  const double h = 1e-3 * y.a;
  auto hy = [&](double v) { return hazard_y_from_density(tn, v, 2.0); };
  const double numeric =
      (-hy(y.b + 2 * h) + 8 * hy(y.b + h) - 8 * hy(y.b - h) + hy(y.b - 2 * h)) / (12 * h);
  CHECK_THAT(penultimate_shape_y(tn, 100.0, 2.0), WithinAbs(numeric, 1e-8));
}

TEST_CASE("hazard identity holds on every family", "[asymptotics]") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> log_tail(std::log(1e-6), std::log(0.3)),
      lam(-1.0, 3.0);
  for (const AnyParent& family : all_families()) {
    std::visit(
        [&](const auto& d) {
          double worst = 0.0;
          for (int i = 0; i < 100; ++i) {
            const double x = upper_quantile(d, std::exp(log_tail(rng)));
            const double l = lam(rng);
            const double y = boxcox(x, l);
            const double step = 1e-3 * transformed_reciprocal_hazard(d, x, l);
            auto hy = [&](double v) { return hazard_y_from_density(d, v, l); };
            if (!in_boxcox_range(y - 2 * step, l) || !in_boxcox_range(y + 2 * step, l)) continue;
            const double numeric = (-hy(y + 2 * step) + 8 * hy(y + step) - 8 * hy(y - step) +
                                    hy(y - 2 * step)) /
                                   (12 * step);
            worst = std::max(worst,
                             std::fabs(numeric - transformed_reciprocal_hazard_derivative(d, x, l)));
          }
          INFO(d.name());
          CHECK(worst < 1e-8);
        },
        family);
  }
}

TEST_CASE("transformed cdf is the parent cdf at the inverse map", "[asymptotics]") {
  const Weibull w(1.5, 2.0);
  for (double l : {-0.5, 0.0, 0.7, 2.0}) {
    for (double x : {0.3, 1.0, 2.2, 5.0}) {
      const double y = boxcox(x, l);
      CHECK_THAT(transformed_cdf(w, y, l), WithinAbs(1.0 - w.survival(x), 1e-12));
      CHECK_THAT(std::exp(transformed_log_cdf(w, y, l)), WithinAbs(1.0 - w.survival(x), 1e-12));
    }
  }
  // below the image of (0, inf) for lambda > 0
  CHECK(transformed_cdf(w, -3.0, 0.5) == 0.0);
}

TEST_CASE("limiting Y shapes", "[asymptotics]") {
  // Frechet class: lambda / alpha
  for (double l : {0.5, 1.0, 2.0}) {
    CHECK_THAT(*limiting_shape_y(ParetoTail(2.0, 1.0, 1.0, 0.3), l), WithinAbs(l / 2.0, 1e-15));
  }
  // bounded class: -1/alpha whatever lambda
  for (double l : {-1.0, 0.5, 3.0}) {
    CHECK_THAT(*limiting_shape_y(BoundedTail(4.0, 2.0, 1.0, 0.0, 2.0), l),
               WithinAbs(-0.25, 1e-15));
  }
  // Gumbel-class laws stay at zero
  for (double l : {-1.0, 0.5, 3.0}) {
    CHECK(*limiting_shape_y(TruncatedNormal{}, l) == 0.0);
    CHECK(*limiting_shape_y(HazardPower(0.5), l) == 0.0);
  }
  // super-heavy log-Pareto is only attracted after a log transform
  CHECK_FALSE(limiting_shape_y(LogPareto(1.0, 1.0, 0.0), 0.3).has_value());
  CHECK_THAT(*limiting_shape_y(LogPareto(1.0, 1.0, 0.0), 0.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("tabulated limiting lambda*", "[asymptotics]") {
  CHECK(*table1_lambda_star(HazardPower(1.0)) == 2.0);
  CHECK(*table1_lambda_star(TruncatedNormal{}) == 2.0);
  CHECK(*table1_lambda_star(ParetoTail(2.0, 1.5)) == 1.5);
  CHECK_FALSE(table1_lambda_star(LogPareto(1.0, 0.0, 0.0)).has_value());
  CHECK(*table1_lambda_star(LogPareto(1.0, 1.0, 0.0)) == 0.0);
  CHECK_FALSE(table1_lambda_star(BoundedTail(2.0, 0.5, 1.0, 1.0, 1.0)).has_value());
}

TEST_CASE("lambda* for the truncated normal", "[asymptotics]") {
  const double b = norming_constants(TruncatedNormal{}, 100.0).b;
  // exact hazard: 1 - b^2 + b/R(b) with R the Mills ratio
  const TruncatedNormal tn;
  const double mills = tn.reciprocal_hazard(b);
  CHECK_THAT(lambda_star_n(tn, 100.0).value, WithinAbs(1.0 - b * b + b / mills, 1e-10));
  // the exact-function value lies within the interpretation window
  CHECK(std::fabs(lambda_star_n(tn, 100.0).value - 1.86) <= 0.15);
  // increases towards 2
  const double big = lambda_star_n(tn, 1e6).value;
  CHECK(big > 1.9);
  CHECK(big < 2.0);
  CHECK(lambda_star_n(tn, 1e4).value < big);

  // four-term Mills series: h/x = b^-2 - b^-4 + 3b^-6 - 15b^-8 and its
  // termwise derivative h' = -b^-2 + 3b^-4 - 15b^-6 + 105b^-8
  auto series = [](double v) {
    const double t = 1.0 / (v * v);
    const double hx = t - t * t + 3 * t * t * t - 15 * t * t * t * t;
    const double hp = -t + 3 * t * t - 15 * t * t * t + 105 * t * t * t * t;
    return 1.0 - hp / hx;
  };
  CHECK_THAT(truncated_normal_series_lambda_star(b).value, WithinAbs(series(b), 1e-12));
  CHECK_THAT(truncated_normal_series_lambda_star(1.75).value, WithinAbs(series(1.75), 1e-12));
  // more terms converge towards the exact value at a high level
  const double hi = 4.5;
  const double exact = 1.0 - hi * hi + hi / tn.reciprocal_hazard(hi);
  CHECK(std::fabs(truncated_normal_series_lambda_star(hi, 4).value - exact) <
        std::fabs(truncated_normal_series_lambda_star(hi, 2).value - exact));
}

TEST_CASE("lambda* status flags", "[asymptotics]") {
  // h' is constant for the generalized Pareto: nothing to improve
  CHECK(lambda_star_n(GeneralizedPareto(1.0, 0.2), 100.0).status ==
        LambdaStarStatus::no_improvement);
  CHECK(lambda_star_n(Exponential(2.0), 100.0).status == LambdaStarStatus::no_improvement);
  // Frechet class with a second-order term converges to beta
  const LambdaStar p = lambda_star_n(ParetoTail(2.0, 1.0, 1.0, 0.5), 1e8);
  CHECK(p.status == LambdaStarStatus::ok);
  CHECK_THAT(p.value, WithinAbs(1.0, 0.05));
  // bounded class with beta < 1 has no limit
  CHECK(lambda_star_n(BoundedTail(2.0, 0.5, 1.0, 1.0, 1.0), 100.0).status ==
        LambdaStarStatus::no_limit);
  CHECK_THROWS_AS(lambda_star_n(LogPareto(1.0, 1.0, 0.0), 100.0), DomainError);
}

TEST_CASE("convergence gaps", "[asymptotics]") {
  const std::vector<double> grid = default_gap_grid();
  const TruncatedNormal tn;
  CHECK(convergence_gap(tn, 100.0, 2.0, grid) < convergence_gap(tn, 100.0, 1.0, grid));

  // exact GEV parent: max-stable, the gap is only the O(1/n) offset of b_n
  const GevParent g(GevParams{0.0, 1.0, 0.1});
  double prev = 1.0;
  for (double n : {1e2, 1e3, 1e4, 1e5}) {
    const double gap = convergence_gap(g, n, 1.0, grid);
    CHECK(gap < 1.0 / n);
    CHECK(gap < prev);
    prev = gap;
  }

  // Pareto with D-term and beta = 1: lambda = 1 beats the rest of the scan
  // once n is large enough for the second-order term to dominate the O(1/n)
  // offset of b_n
  const ParetoTail p(2.0, 1.0, 1.0, 0.5);
  const double at_one = convergence_gap(p, 1e5, 1.0, grid);
  for (double l : {0.25, 0.5, 0.75, 1.25, 1.5, 2.0, 2.5, 3.0}) {
    CHECK(at_one < convergence_gap(p, 1e5, l, grid));
  }
}

TEST_CASE("transformed Pareto maxima follow the penultimate GEV", "[asymptotics]") {
  const double n = 1000.0;
  const NormingTriple t = norming_constants(ParetoTail(2.0), n);
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double l : {0.5, 2.0}) {
    const NormingTriple y = transform_norming(t, l);
    std::vector<double> z;
    for (int i = 0; i < 20000; ++i) {
      // maximum of n draws by inversion of F^n
      const double v = 1.0 - u(rng);
      const double x = std::pow(-std::expm1(std::log(v) / n), -0.5);
      z.push_back((boxcox(x, l) - y.b) / y.a);
    }
    const GevParams limit{0.0, 1.0, l / 2.0};
    CHECK(ks_distance(z, [&](double v) { return gev_cdf(v, limit); }) < 0.02);
  }
}
