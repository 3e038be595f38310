#pragma once

// Drift coefficient fields of the local-time SDE and the reduced
// (self-similar) dynamics:
//
//   g(t, y)   = 8 t^{1/3} r(y t^{-2/3})        (limiting drift; g(0, y) = 0)
//   g_h(t, y) = pre-limit drift defined through the occupation kernel gamma;
//               g_h(t, y, h)/h -> g(t, y) as h -> 0
//   b(z)      = 8 r(z/2) - (2/3) z^2           (reduced drift)
//   nu(dz)    = C p1(z/2)^2 exp(-z^3/36) dz    (invariant law of b-diffusion)
//   s(x)      = int_0^x p1(0)^2 p1(y/2)^{-2} exp(y^3/36) dy   (scale function)
//
// with r = p1'/p1 the logarithmic derivative of the spectrally positive
// 3/2-stable density p1.  All evaluators are pure; the invariant-law table
// and the normalizer C are built once and cached.

#include <cstddef>
#include <vector>

#include "sbmlab/errors.hpp"
#include "sbmlab/stabledist.hpp"

namespace sbmlab::drift {

// Bundles the density model the drift evaluators read from and the
// quadrature tolerance used by the integral-defined members.
struct DriftField {
  const stabledist::StableDensityModel* density_model;
  double quadrature_tol;
};

// The default field: the default stable-density model, tolerance 1e-11.
const DriftField& default_field();

// Limiting drift g(t, y).  g(0, y) = 0 for every y; t < 0 raises
// DomainError.  For t > 0 this is exactly 8 t^{1/3} r(y t^{-2/3}) and is
// evaluated in that scaling form, so g(l^3 t, l^2 y) = l g(t, y) holds to
// rounding.  No clipping: for y < 0 and t -> 0 the honest ~ (16/3) y^2 / t
// blowup is returned.
double g(double t, double y);

// Pre-limit drift g_h(t, y, h), t > 0, h > 0:
//   (c1 t / p_t(y)) int_0^inf (p_t(y) - p_t(y-z)) (2 - gamma(3z/(2h^2)))
//                            z^{-3/2} dz.
// Vanishes linearly in h; g_h(t, y, h)/h -> g(t, y).  Throws
// ConvergenceError if the quadrature cannot reach the internal tolerance.
double g_h(double t, double y, double h);

// Reduced drift b(z) = 8 r(z/2) - (2/3) z^2; superlinear inward pull at both
// infinities (b ~ -(2/3) sgn(z) z^2).
double b(double z);

// Certified bound on |r| over [w0, inf) where w0 is the mode of p1 (the
// region where the drift g is negative).  sup is the bound, at its argmax,
// from the left end of the certified interval.
struct RatioBound {
  double sup;
  double at;
  double from;
};
const RatioBound& certified_ratio_bound();

// Invariant law of the reduced diffusion: density, CDF, quantile, and the
// cached normalizer C.  The CDF/quantile pair works off a monotone 4001-node
// table with mass-adapted spacing and monotone cubic interpolation.
struct InvariantLaw {
  double normalizer;            // C
  std::vector<double> grid_z;   // 4001 nodes, increasing
  std::vector<double> grid_F;   // CDF at nodes, strictly increasing 0 -> 1
  std::vector<double> grid_f;   // density at nodes
};
const InvariantLaw& invariant_law();

double invariant_density(double z);
double invariant_cdf(double z);
// p outside (0, 1) raises DomainError.
double invariant_quantile(double p);

// Scale function s(x) with s(0) = 0, strictly increasing, normalized so
// s'(0) = 1.  The integrand grows like exp(|x|^3/36), so |x| beyond ~29
// overflows double range: those arguments raise RangeError reporting the
// last representable abscissa and the value there.
double scale_function(double x);
// s'(x) (exact log-space evaluation; s'(x) * invariant_density(x) is
// constant in x).
double scale_derivative(double x);

}  // namespace sbmlab::drift
