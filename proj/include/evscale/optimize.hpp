#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <span>
#include <vector>

#include "evscale/error.hpp"

namespace evscale {

struct SimplexOptions {
  double size_tolerance = 1e-9;
  int max_iterations = 4000;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Penalty returned to the simplex in place of non-finite objective values.
inline constexpr double kSimplexPenalty = 1e100;

/// Derivative-free minimization (Nelder-Mead, GSL nmsimplex2).
inline SimplexResult minimize_simplex(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> start,
                                      std::span<const double> steps,
                                      const SimplexOptions& opts = {}) {
  const std::size_t n = start.size();
  if (n == 0 || steps.size() != n) throw UsageError("minimize_simplex: dimension mismatch");

  struct Context {
    const std::function<double(std::span<const double>)>* f;
    std::vector<double> buffer;
  } ctx{&f, std::vector<double>(n)};

  gsl_multimin_function fn;
  fn.n = n;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* params) -> double {
    auto* c = static_cast<Context*>(params);
    for (std::size_t i = 0; i < c->buffer.size(); ++i) c->buffer[i] = gsl_vector_get(v, i);
    const double val = (*c->f)(c->buffer);
    return std::isfinite(val) ? val : kSimplexPenalty;
  };

  const auto vec_deleter = [](gsl_vector* v) { gsl_vector_free(v); };
  std::unique_ptr<gsl_vector, decltype(vec_deleter)> x0(gsl_vector_alloc(n), vec_deleter);
  std::unique_ptr<gsl_vector, decltype(vec_deleter)> ss(gsl_vector_alloc(n), vec_deleter);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x0.get(), i, start[i]);
    gsl_vector_set(ss.get(), i, steps[i]);
  }

  const auto min_deleter = [](gsl_multimin_fminimizer* m) { gsl_multimin_fminimizer_free(m); };
  std::unique_ptr<gsl_multimin_fminimizer, decltype(min_deleter)> state(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), min_deleter);
  gsl_error_handler_t* old_handler = gsl_set_error_handler_off();
  gsl_multimin_fminimizer_set(state.get(), &fn, x0.get(), ss.get());

  SimplexResult result;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && result.iterations < opts.max_iterations) {
    ++result.iterations;
    if (gsl_multimin_fminimizer_iterate(state.get()) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(state.get()),
                                    opts.size_tolerance);
  }
  gsl_set_error_handler(old_handler);

  result.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.x[i] = gsl_vector_get(state->x, i);
  result.value = state->fval;
  result.converged = status == GSL_SUCCESS && result.value < kSimplexPenalty;
  return result;
}

/// Simplex restarted from its own optimum until a converged round stops
/// improving the value; guards against premature collapse of the simplex.
inline SimplexResult minimize_polished(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> start,
                                       std::span<const double> steps,
                                       const SimplexOptions& opts = {}, int max_rounds = 6) {
  SimplexResult best = minimize_simplex(f, start, steps, opts);
  for (int round = 1; round < max_rounds; ++round) {
    SimplexResult r = minimize_simplex(f, best.x, steps, opts);
    const double gain = best.value - r.value;
    const bool settled = gain <= 1e-9 * std::max(1.0, std::fabs(best.value));
    const bool any_converged = best.converged || r.converged;
    if (r.value <= best.value) best = std::move(r);
    best.converged = any_converged;
    if (settled && best.converged) break;
  }
  return best;
}

/// Central finite-difference Hessian of f at x with per-coordinate steps h.
inline Eigen::MatrixXd numeric_hessian(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, std::span<const double> h) {
  const std::size_t n = x.size();
  if (h.size() != n) throw UsageError("numeric_hessian: dimension mismatch");
  std::vector<double> p(x.begin(), x.end());
  auto eval = [&](std::size_t i, double di, std::size_t j, double dj) {
    p.assign(x.begin(), x.end());
    p[i] += di;
    p[j] += dj;
    return f(p);
  };
  const double f0 = f(x);
  Eigen::MatrixXd hess(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    hess(i, i) = (eval(i, h[i], i, 0.0) - 2.0 * f0 + eval(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (eval(i, h[i], j, h[j]) - eval(i, h[i], j, -h[j]) -
                        eval(i, -h[i], j, h[j]) + eval(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

inline Eigen::MatrixXd numeric_hessian(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double rel_step = 1e-4) {
  std::vector<double> h(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) h[i] = rel_step * std::max(1.0, std::fabs(x[i]));
  return numeric_hessian(f, x, h);
}

}  // namespace evscale
