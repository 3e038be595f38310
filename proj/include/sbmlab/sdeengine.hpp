#pragma once

// Path simulation for the degenerate local-time SDE and its reduced form.
//
// Two routes to the same object:
//
//   main route     d(Ldot) = 4 sqrt(L) dB + g(L, Ldot/2) dx,  dL = Ldot dx,
//                  integrated in the spatial variable x with a tamed
//                  Euler-Maruyama step and absorption at L <= eps_stop;
//
//   reduced route  dZ = b(Z) dt + 4 dB on the self-similar scale, with the
//                  exponential companion Lambda_t = Lambda_0 exp(int_0^t Z),
//                  mapped back to (L, Ldot) through the time change
//                  x = int Lambda^{1/3} dt, L = Lambda, Ldot = Z Lambda^{2/3}.
//
// Both drifts are superlinear, so the deterministic part of every step is
// tamed: drift * step / (1 + step * |drift|).  All operations are
// deterministic functions of (seed, step size).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sbmlab/errors.hpp"

namespace sbmlab::sde {

// Identification of the scheme that produced a path.
struct SchemeMeta {
  std::string scheme;     // "tamed_euler_main" or "time_change_reconstruction"
  double step = 0.0;      // dx (main route) or dt (reduced route)
  std::uint64_t seed = 0;
};

// Sample path of (L, Ldot) over an increasing spatial grid starting at 0.
// L >= 0 everywhere.  R_hat is the absorption abscissa (first grid point
// where L fell to or below the stopping threshold); +inf when the path was
// still alive at the end of the grid.  Beyond R_hat the path is identically
// (0, 0); the grid stores the absorption node explicitly and then stops.
struct LocalTimePath {
  std::vector<double> x_grid;
  std::vector<double> L;
  std::vector<double> Ldot;
  double R_hat = std::numeric_limits<double>::infinity();
  // Max over the grid of |L_{i+1} - L_i - Ldot_i dx| (local truncation of the
  // trapezoidal L-update, = dx |Ldot_{i+1} - Ldot_i| / 2).
  double trunc_bound = 0.0;
  // Fraction of steps whose trapezoidal L-update went negative before being
  // clamped to 0 (main route only; 0 for reconstructed paths).
  double clamp_fraction = 0.0;
  SchemeMeta meta;
};

// Sample path of the reduced diffusion Z with its exponential companion
// Lambda > 0.  The stored grid may be a thinned view of the integration grid
// (see store_every); Lambda and the time change are always accumulated at
// full resolution.
struct ZDiffusionPath {
  std::vector<double> t_grid;
  std::vector<double> Z;
  std::vector<double> Lambda;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

// Stopping rule for simulate_z.
//   adaptive_tail: stop once the cumulative Lambda^{1/3} integral has
//                  converged -- the increment over the trailing 10% of steps
//                  falls below 1e-6 of the total -- capped at t_max.  This is
//                  the right rule when the path feeds reconstruct_local_time.
//   fixed:         run to t_max exactly (equilibrium sampling of Z, where the
//                  companion integral converging is irrelevant).
enum class Horizon { adaptive_tail, fixed };

// Simulate the reduced diffusion dZ = b(Z) dt + 4 dB with the tamed Euler
// step
//   Z_{k+1} = Z_k + b(Z_k) dt / (1 + dt |b(Z_k)|) + 4 sqrt(dt) N(0,1)
// and the trapezoidal exponent update
//   log Lambda_{k+1} = log Lambda_k + dt (Z_k + Z_{k+1}) / 2.
//
// Preconditions: lambda0 > 0, dt in (0, 0.1], t_max >= dt, store_every >= 1
// (DomainError).  Throws BlowupError if the state leaves double range.
// diffusion_scale rescales the noise coefficient (0 gives the deterministic
// flow; diagnostic hook, default 1).
ZDiffusionPath simulate_z(double z0, double lambda0, double t_max, double dt,
                          std::uint64_t seed,
                          Horizon horizon = Horizon::adaptive_tail,
                          std::size_t store_every = 1,
                          double diffusion_scale = 1.0);

// Map a reduced-route path back to (L, Ldot):
//   x_k   = trapezoidal cumulative integral of Lambda^{1/3} over t_grid,
//   L_k   = Lambda_k,  Ldot_k = Z_k Lambda_k^{2/3},  R_hat = x_end.
//
// Requires the companion integral to have converged: the x-increment over
// the trailing 10% of stored steps must be < tail_tol of the total,
// otherwise HorizonError carrying the achieved tail fraction.  (tail_tol
// defaults to the convergence threshold 1e-6; pass a larger value to
// reconstruct deliberately truncated paths, e.g. transform round-trips.)
LocalTimePath reconstruct_local_time(const ZDiffusionPath& zpath,
                                     double tail_tol = 1e-6);

// Simulate the main SDE in x from L(0) = t0 > 0, Ldot(0) = ydot0:
//   Ldot_{k+1} = Ldot_k + g(L_k, Ldot_k/2) dx / (1 + dx |g|)
//                + 4 sqrt(max(L_k, 0)) sqrt(dx) N(0,1),
//   L_{k+1}    = L_k + dx (Ldot_k + Ldot_{k+1}) / 2,
// clamping negative L to 0 (counted in clamp_fraction) and absorbing to
// (0, 0) at the first grid point with L <= eps_stop; the grid ends there.
//
// Preconditions: t0 > 0, x_max >= dx, dx in (0, 1e-2], eps_stop > 0
// (DomainError).  Throws BlowupError if the state leaves double range.
LocalTimePath simulate_main_sde(double t0, double ydot0, double x_max,
                                double dx, std::uint64_t seed,
                                double eps_stop = 1e-6);

// Realized quadratic variation of Ldot up to x_bar on the path grid coarsened
// by the factor refine >= 1: sum of squared Ldot increments over grid indices
// 0, refine, 2*refine, ... restricted to x <= x_bar.  An empty or everywhere-
// zero path gives 0.  x_bar beyond both the stored grid and R_hat raises
// DomainError (the path is unknown there).
double realized_qv(const LocalTimePath& path, double x_bar, int refine = 1);

// Least-squares slope of log L against log(R_hat - x) over the grid points
// with L in [window_lo, window_hi].  Requires an absorbed path (finite R_hat;
// DomainError otherwise) and at least 10 window points (InsufficientDataError
// carrying the count).  The cubic extinction profile makes this ~= 3.
double extinction_exponent(const LocalTimePath& path, double window_lo = 1e-5,
                           double window_hi = 1e-2);

}  // namespace sbmlab::sde
