#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sbmlab/branch.hpp"
#include "sbmlab/errors.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab::stabledist {

// --------------------------------------------------------------------------
// Constants of the spectrally positive 3/2-stable process U
// --------------------------------------------------------------------------

struct StableConstants {
  double c0 = 0.57735026918962576451;   // 1/sqrt(3)
  double c1 = 0.34549414947133547927;   // sqrt(3/(8 pi))
  double alpha_index = 1.5;
  double psi_coeff = 0.81649658092772603273;  // sqrt(2/3)
};

const StableConstants& constants();

struct StableDensityModel {
  EvalBranch airy_branch_config;                    // body-route settings
  std::pair<double, double> ratio_tail_thresholds;  // (left, right)
};

const StableDensityModel& default_model();

// --------------------------------------------------------------------------
// Density of U_1 and its relatives
// --------------------------------------------------------------------------

// Density p1(y): Airy-route body with polynomial right tail (y >= 15) and
// super-exponential left tail (y <= -12). Always > 0 (clamped to the
// smallest positive double where the value underflows).
double p1(double y, EvalBranch* br = nullptr);

// log p1(y), exact in regimes where p1 itself underflows.
double p1_log(double y);

// Spatial derivative p1'(y) = p1(y) * ratio_r(y).
double p1_prime(double y);

// r(w) = p1'(w)/p1(w); tail expansions beyond the thresholds +-15.
double ratio_r(double w, EvalBranch* br = nullptr);

// Scaling forms: p_t(x) = t^{-2/3} p1(x t^{-2/3}), same for the derivative.
double pt_density(double t, double x);
double pt_prime(double t, double x);
double pt_log(double t, double x);

// Independent Fourier route:
//   p1(y) = (1/pi) Int_0^inf exp(-c0 u^{3/2}) cos(u y + c0 u^{3/2}) du.
// rel_tol must lie in (1e-12, 1e-3). Throws ConvergenceError carrying the
// achieved estimate when the oscillatory cancellation exceeds what double
// precision can certify (deep left tail).
double p1_fourier(double y, double rel_tol);

// Numeric CDF of p1 (cached body table + analytic polynomial right tail)
// and its inverse.
double cdf(double y);
double quantile(double p);

// Quadrature of y * p1(y) over [lo, hi] (truncated-mean oracle for tests).
double truncated_mean(double lo, double hi);

// --------------------------------------------------------------------------
// Sampling
// --------------------------------------------------------------------------

// One draw of U_dt (Chambers-Mallows-Stuck; law validated statistically).
double sample_increment(double dt, rng::Stream& stream);

struct JumpSet {
  std::vector<double> sizes;  // decreasing, all > cutoff
  std::vector<double> times;  // co-sorted with sizes, values in [0, horizon]
  double cutoff = 0.0;
  double horizon = 0.0;
};

// Poisson point process of jumps of U above eps on [0, t]:
// intensity c1 z^{-5/2} dz ds; count ~ Poisson(t (2/3) c1 eps^{-3/2}).
JumpSet sample_jumps_above(double t, double eps, rng::Stream& stream);

// --------------------------------------------------------------------------
// Conditional jump functionals
// --------------------------------------------------------------------------

// E[sum of jumps above eps | U_t = y], closed quadrature form
//   y + 2 c1 t eps^{-1/2}
//     + (c1 t / p_t(y)) Int_0^eps (p_t(y) - p_t(y-z)) z^{-3/2} dz.
double truncated_jump_sum_conditional(double t, double y, double eps);

enum class BridgeFunctional {
  trunc_sum,  // sum of jumps above eps (parameter = eps)
  gamma_sum,  // sum of z_j * gamma(3 z_j / (2 h^2)) (parameter = h)
};

struct BridgeResult {
  double estimate = 0.0;
  double ci_lo = 0.0;        // 95% bootstrap CI
  double ci_hi = 0.0;
  std::size_t ess = 0;       // paths kept by the kernel condition
  std::size_t n = 0;         // paths simulated
};

// Kernel-conditioned Monte Carlo estimate of E[functional | U_t = y]:
// paths built as small-jump Gaussian + banded CLT + explicit jumps above a
// fixed cutoff, conditioned on |U_t - y| <= h_bin (box kernel).
// Throws InsufficientDataError when fewer than 100 paths survive.
BridgeResult bridge_check(double t, double y, double h_bin,
                          BridgeFunctional functional, double param,
                          std::size_t n, rng::Stream& stream);

// Per-unit-t moments of the path decomposition used by bridge_check;
// exposed so tests can pin them against independently derived values.
struct BridgeBandMoments {
  double delta = 0.0;    // Gaussian replacement cutoff
  double cutoff = 0.0;   // explicit-jump cutoff a
  double mean_u = 0.0;   // E[sum z over (delta, a]]
  double var_u = 0.0;
  double mean_f = 0.0;   // E[sum z gamma(3z/(2h^2)) over (delta, a]]
  double var_f = 0.0;
  double cov_uf = 0.0;
  double subdelta_f_mean = 0.0;  // E[sum z gamma(...) over (0, delta]]
  double jump_rate = 0.0;        // expected explicit jumps per unit t
};

BridgeBandMoments bridge_band_moments(double h);

}  // namespace sbmlab::stabledist
