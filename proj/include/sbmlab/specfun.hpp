#pragma once

// Scalar special functions with certified asymptotic branches:
//  - Airy Ai, Ai' (plus exponentially scaled variants on the positive axis),
//  - the fused scaled complementary error function e^x erfc(sqrt(x)),
//  - the occupation-moment kernels chi, chi', chi'' and gamma, gamma'.
//
// Every function with more than one evaluation branch reports which branch it
// took through an optional EvalBranch out-parameter; at each switch point the
// two branches agree
// to better than 1e-9 relative (enforced by tests).

#include <array>
#include <vector>

#include "sbmlab/branch.hpp"
#include "sbmlab/errors.hpp"

namespace sbmlab::specfun {

// Branch switch points (function arguments).
inline constexpr double kAirySwitch = 6.4;    // Maclaurin <-> asymptotic
inline constexpr double kAiryNegCutoff = -7.0;  // oscillatory-range cutoff
inline constexpr double kErfcxSwitch = 6.25;  // direct <-> continued fraction
inline constexpr double kChiSwitch = 40.0;    // closed form <-> expansion
inline constexpr double kGammaSwitch = 44.0;  // closed form <-> expansion

// Complementary error function (thin wrapper, total on finite reals).
double erfc(double x);

// e^x * erfc(sqrt(x)) for x >= 0, evaluated as one fused primitive so that
// no overflow*underflow product ever forms. Long-double internals.
double erfcx_sqrt(double x, EvalBranch* br = nullptr);

// Airy function of the first kind and its derivative on [kAiryNegCutoff, inf).
// Arguments below the oscillatory-range cutoff raise DomainError.
double airy_ai(double x, EvalBranch* br = nullptr);
double airy_aip(double x, EvalBranch* br = nullptr);

// Exponentially scaled Airy functions on x >= 0:
//   ais(x)  = e^{zeta} Ai(x),   aips(x) = e^{zeta} Ai'(x),
// with zeta = (2/3) x^{3/2}.  These stay in the normal floating-point range
// for every x >= 0 and are the building blocks of the stable-density code.
double airy_ais(double x, EvalBranch* br = nullptr);
double airy_aips(double x, EvalBranch* br = nullptr);

// Cancellation-resistant Airy body pair for 0 <= x <= 8.5:
//   *ratio_out = Ai(x^2) / (x Ai(x^2) + Ai'(x^2)),
//   *m_out     = e^{(2/3) x^3} (x Ai(x^2) + Ai'(x^2)).
// The combination x Ai + Ai' cancels its leading order for large arguments,
// and near the Maclaurin/asymptotic switch the double-precision Airy pair is
// at its weakest (~1e-10 relative), so evaluating the combination from
// rounded doubles loses up to ~7 digits.  This routine runs the standard
// expansions in quadruple precision (and, for large arguments, sums the
// combination from its own expansion in which the cancelling term is dropped
// exactly), keeping both outputs at double round-off.  Returns the number of
// series terms consumed.
int airy_body_pair(double x, double* ratio_out, double* m_out);

// Occupation-moment kernel chi and derivatives, x > 0:
//   chi(x)   = 2/sqrt(pi) (x^{3/2} + x^{1/2}) - 2x(x + 3/2) e^x erfc(sqrt(x))
// with chi', chi'' from the corresponding closed forms, switching to exact
// asymptotic expansions beyond kChiSwitch where the closed form cancels.
double chi(double x, EvalBranch* br = nullptr);
double chi_prime(double x, EvalBranch* br = nullptr);
double chi_second(double x, EvalBranch* br = nullptr);

// gamma(u) = -(8/3) sqrt(pi) u^{3/2} (chi(u) + u chi'(u)) for u > 0, with
// gamma(0) = 0 and the exact expansion gamma(u) = 2 + sum_k G_k u^{-k}
// beyond kGammaSwitch.  gamma' uses the closed form
//   gamma'(x) = (3/2) gamma(x)/x - (8/3) sqrt(pi) x^{3/2} (2chi'(x) + x chi''(x)),
// with gamma'(0) = 0 by convention.
double gamma_fn(double u, EvalBranch* br = nullptr);
double gamma_prime(double u, EvalBranch* br = nullptr);

// Coefficients u_k of the Airy asymptotic series (u_0 = 1), exposed so the
// stable-density module can assemble cancellation-free combined expansions.
const std::array<long double, 27>& airy_u_coefficients();

// Coefficients G_k (k >= 1) of the large-u expansion
//   gamma(u) = 2 + sum_k G_k u^{-k},
// exposed so drift-kernel quadratures can integrate the gamma tail
// analytically.  G_1 = -30, G_2 = 262.5, ...; the sequence eventually grows
// (the expansion is asymptotic), so consumers must truncate at the smallest
// term.
const std::vector<double>& gamma_tail_coefficients();

}  // namespace sbmlab::specfun
