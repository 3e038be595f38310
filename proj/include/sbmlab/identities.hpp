#pragma once

// Closed-form identity suite spanning the special-function, stable-density
// and drift layers.  Every row states a value that two independent routes
// must agree on (a quadrature against a closed form, or two evaluation
// paths against each other), with an absolute tolerance.  The suite backs
// the `selfcheck` command and the acceptance harness.

#include <cmath>
#include <string>
#include <vector>

namespace sbmlab::identities {

struct IdentityRow {
  std::string name;
  double computed = 0.0;
  double expected = 0.0;
  double abs_tol = 0.0;

  double abs_err() const { return std::fabs(computed - expected); }
  bool hit() const { return abs_err() <= abs_tol; }
};

// Evaluates the full suite (a few seconds of quadrature).
std::vector<IdentityRow> identity_suite();

// Empirical estimate of the constant C in |gamma(z)| <= C min(1, z^2),
// taken as a supremum over a log-spaced grid.  Reported, never asserted:
// no closed form for C is available.
double gamma_bound_constant_estimate();

}  // namespace sbmlab::identities
