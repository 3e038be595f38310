#pragma once

// Thin wrappers over adaptive quadrature back-ends.  Quadrature is
// infrastructure here: every integral identity in the library states *what*
// is integrated; these helpers only standardize tolerance/error handling.

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "sbmlab/errors.hpp"

namespace sbmlab::quad {

// Adaptive Gauss-Kronrod on a finite interval; rel_tol is a target for the
// local error estimate.  Raise max_depth for wide oscillatory intervals where
// a tight tolerance would otherwise stall at the subdivision cap with an
// inflated error report; the default keeps integrands that can never certify
// the tolerance (cancellation, denormals) from refining without benefit.
template <class F>
double finite(F&& f, double a, double b, double rel_tol,
              double* err_out = nullptr, std::size_t max_depth = 15) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, max_depth, rel_tol, &err);
  if (err_out) *err_out = err;
  return v;
}

// Finite interval with integrable endpoint singularities.
template <class F>
double finite_singular(F&& f, double a, double b, double tol,
                       double* err_out = nullptr) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  double err = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  const double v =
      integrator.integrate(std::forward<F>(f), a, b, tol, &err, &l1, &levels);
  if (err_out) *err_out = err;
  return v;
}

// Semi-infinite integral over (a, inf) for integrands with exponential-ish
// decay.
template <class F>
double semi_infinite(F&& f, double a, double tol, double* err_out = nullptr) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  const double v = integrator.integrate(std::forward<F>(f), a,
                                        std::numeric_limits<double>::infinity(),
                                        tol, &err, &l1, &levels);
  if (err_out) *err_out = err;
  return v;
}

// Trapezoid rule over a uniform grid given by (values, dx).
template <class Vec>
double trapezoid_uniform(const Vec& values, double dx) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * dx;
}

}  // namespace sbmlab::quad
