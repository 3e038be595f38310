#include "sbmlab/sdeengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sbmlab/drift.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab::sde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest positive Lambda we report.  The exponent of the companion can
// drift below the double exponent range on long runs; the path itself is
// fine (everything downstream works off Lambda^{1/3} or log-scale effects),
// so clamp instead of throwing.
constexpr double kLambdaFloor = std::numeric_limits<double>::denorm_min();

double tamed(double drift, double step) {
  return drift * step / (1.0 + step * std::fabs(drift));
}

}  // namespace

ZDiffusionPath simulate_z(double z0, double lambda0, double t_max, double dt,
                          std::uint64_t seed, Horizon horizon,
                          std::size_t store_every, double diffusion_scale) {
  if (!std::isfinite(z0) || !std::isfinite(lambda0) || !(lambda0 > 0.0)) {
    throw DomainError("simulate_z: need finite z0 and lambda0 > 0");
  }
  if (!(dt > 0.0) || dt > 0.1) {
    throw DomainError("simulate_z: dt must lie in (0, 0.1]");
  }
  if (!std::isfinite(t_max) || !(t_max >= dt)) {
    throw DomainError("simulate_z: t_max must be finite and >= dt");
  }
  if (store_every < 1) {
    throw DomainError("simulate_z: store_every must be >= 1");
  }
  if (!(diffusion_scale >= 0.0)) {
    throw DomainError("simulate_z: diffusion_scale must be >= 0");
  }

  const auto n_max =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t_max / dt)));
  const double noise = 4.0 * diffusion_scale * std::sqrt(dt);
  rng::Stream stream(seed);

  ZDiffusionPath path;
  path.dt = dt;
  path.seed = seed;
  const std::size_t stored_guess = n_max / store_every + 2;
  path.t_grid.reserve(stored_guess);
  path.Z.reserve(stored_guess);
  path.Lambda.reserve(stored_guess);
  path.t_grid.push_back(0.0);
  path.Z.push_back(z0);
  path.Lambda.push_back(lambda0);

  // Companion state, accumulated at full resolution regardless of storage
  // thinning: log Lambda and the running trapezoidal integral of
  // Lambda^{1/3} (the spatial extent of the reconstructed path).
  double z = z0;
  double log_lambda = std::log(lambda0);
  double lambda = lambda0;
  double integral = 0.0;
  double prev_cbrt = std::cbrt(lambda0);

  // History of the cumulative integral, kept only when the adaptive tail
  // rule needs to look back 10% of the steps taken so far.
  std::vector<double> integral_hist;
  const bool adaptive = horizon == Horizon::adaptive_tail;
  if (adaptive) {
    integral_hist.reserve(stored_guess * store_every + 2);
    integral_hist.push_back(0.0);
  }

  std::size_t last_stored = 0;
  std::size_t k = 0;
  while (k < n_max) {
    ++k;
    const double bd = drift::b(z);
    const double z_new = z + tamed(bd, dt) + noise * stream.normal();
    if (!std::isfinite(z_new)) {
      throw BlowupError("simulate_z: state became non-finite", k);
    }
    log_lambda += 0.5 * dt * (z + z_new);
    lambda = std::exp(log_lambda);
    if (std::isinf(lambda)) {
      throw BlowupError("simulate_z: companion Lambda overflowed", k);
    }
    if (lambda < kLambdaFloor) lambda = kLambdaFloor;
    const double c = std::cbrt(lambda);
    integral += 0.5 * dt * (prev_cbrt + c);
    prev_cbrt = c;
    z = z_new;

    if (k % store_every == 0) {
      path.t_grid.push_back(static_cast<double>(k) * dt);
      path.Z.push_back(z);
      path.Lambda.push_back(lambda);
      last_stored = k;
    }

    if (adaptive) {
      integral_hist.push_back(integral);
      if (k >= 100 && k % 64 == 0) {
        const std::size_t window = std::max<std::size_t>(1, k / 10);
        const double tail = integral - integral_hist[k - window];
        if (tail < 1e-6 * integral) break;
      }
    }
  }

  if (last_stored != k) {
    path.t_grid.push_back(static_cast<double>(k) * dt);
    path.Z.push_back(z);
    path.Lambda.push_back(lambda);
  }
  return path;
}

LocalTimePath reconstruct_local_time(const ZDiffusionPath& zpath,
                                     double tail_tol) {
  const std::size_t n = zpath.t_grid.size();
  if (n < 3 || zpath.Z.size() != n || zpath.Lambda.size() != n) {
    throw DomainError(
        "reconstruct_local_time: need a consistent path with >= 3 nodes");
  }
  if (!(tail_tol > 0.0)) {
    throw DomainError("reconstruct_local_time: tail_tol must be > 0");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(zpath.Lambda[i] > 0.0) || !std::isfinite(zpath.Z[i])) {
      throw DomainError(
          "reconstruct_local_time: path values must be finite with Lambda > 0");
    }
  }

  LocalTimePath path;
  path.x_grid.resize(n);
  path.L.resize(n);
  path.Ldot.resize(n);

  double x = 0.0;
  double prev_cbrt = std::cbrt(zpath.Lambda[0]);
  path.x_grid[0] = 0.0;
  path.L[0] = zpath.Lambda[0];
  path.Ldot[0] = zpath.Z[0] * prev_cbrt * prev_cbrt;
  for (std::size_t i = 1; i < n; ++i) {
    const double c = std::cbrt(zpath.Lambda[i]);
    x += 0.5 * (zpath.t_grid[i] - zpath.t_grid[i - 1]) * (prev_cbrt + c);
    prev_cbrt = c;
    path.x_grid[i] = x;
    path.L[i] = zpath.Lambda[i];
    path.Ldot[i] = zpath.Z[i] * c * c;
  }

  const double total = path.x_grid[n - 1];
  if (!(total > 0.0)) {
    throw DomainError("reconstruct_local_time: degenerate time change");
  }
  const std::size_t window = std::max<std::size_t>(1, (n - 1) / 10);
  const double tail_fraction =
      (total - path.x_grid[n - 1 - window]) / total;
  if (!(tail_fraction < tail_tol)) {
    throw HorizonError(
        "reconstruct_local_time: Lambda^{1/3} integral not converged "
        "(extend t_max)",
        tail_fraction);
  }

  path.R_hat = total;
  double trunc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dx = path.x_grid[i + 1] - path.x_grid[i];
    trunc = std::max(
        trunc, std::fabs(path.L[i + 1] - path.L[i] - path.Ldot[i] * dx));
  }
  path.trunc_bound = trunc;
  path.clamp_fraction = 0.0;
  path.meta = {"time_change_reconstruction", zpath.dt, zpath.seed};
  return path;
}

LocalTimePath simulate_main_sde(double t0, double ydot0, double x_max,
                                double dx, std::uint64_t seed,
                                double eps_stop) {
  if (!std::isfinite(t0) || !(t0 > 0.0) || !std::isfinite(ydot0)) {
    throw DomainError("simulate_main_sde: need finite t0 > 0 and finite ydot0");
  }
  if (!(dx > 0.0) || dx > 1e-2) {
    throw DomainError("simulate_main_sde: dx must lie in (0, 1e-2]");
  }
  if (!std::isfinite(x_max) || !(x_max >= dx)) {
    throw DomainError("simulate_main_sde: x_max must be finite and >= dx");
  }
  if (!(eps_stop > 0.0)) {
    throw DomainError("simulate_main_sde: eps_stop must be > 0");
  }

  const auto n_max =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(x_max / dx)));
  const double sqrt_dx = std::sqrt(dx);
  rng::Stream stream(seed);

  LocalTimePath path;
  path.meta = {"tamed_euler_main", dx, seed};
  path.x_grid.reserve(n_max + 1);
  path.L.reserve(n_max + 1);
  path.Ldot.reserve(n_max + 1);
  path.x_grid.push_back(0.0);
  path.L.push_back(t0);
  path.Ldot.push_back(ydot0);

  double l = t0;
  double ldot = ydot0;
  double trunc = 0.0;
  std::size_t clamped = 0;
  std::size_t steps = 0;
  for (std::size_t k = 1; k <= n_max; ++k) {
    const double gd = drift::g(l, 0.5 * ldot);
    const double ldot_new =
        ldot + tamed(gd, dx) + 4.0 * std::sqrt(l) * sqrt_dx * stream.normal();
    double l_new = l + 0.5 * dx * (ldot + ldot_new);
    if (!std::isfinite(l_new) || !std::isfinite(ldot_new)) {
      throw BlowupError("simulate_main_sde: state became non-finite", k);
    }
    ++steps;
    if (l_new < 0.0) {
      ++clamped;
      l_new = 0.0;
    }
    trunc = std::max(trunc, std::fabs(0.5 * dx * (ldot_new - ldot)));
    const double x = static_cast<double>(k) * dx;
    if (l_new <= eps_stop) {
      path.x_grid.push_back(x);
      path.L.push_back(0.0);
      path.Ldot.push_back(0.0);
      path.R_hat = x;
      break;
    }
    path.x_grid.push_back(x);
    path.L.push_back(l_new);
    path.Ldot.push_back(ldot_new);
    l = l_new;
    ldot = ldot_new;
  }

  path.trunc_bound = trunc;
  path.clamp_fraction =
      steps == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(steps);
  return path;
}

double realized_qv(const LocalTimePath& path, double x_bar, int refine) {
  if (refine < 1) {
    throw DomainError("realized_qv: refine must be >= 1");
  }
  if (!std::isfinite(x_bar)) {
    throw DomainError("realized_qv: x_bar must be finite");
  }
  const std::size_t n = path.x_grid.size();
  if (n == 0 || x_bar < path.x_grid.front()) return 0.0;

  const double slack = 1e-12 * std::max(1.0, std::fabs(x_bar));
  if (x_bar > path.x_grid.back() + slack && !(path.R_hat <= x_bar)) {
    throw DomainError("realized_qv: x_bar beyond the simulated range");
  }

  // Largest index still inside [0, x_bar].
  std::size_t last = n - 1;
  while (last > 0 && path.x_grid[last] > x_bar + slack) --last;

  const auto stride = static_cast<std::size_t>(refine);
  double qv = 0.0;
  std::size_t prev = 0;
  for (std::size_t i = stride; i <= last; i += stride) {
    const double inc = path.Ldot[i] - path.Ldot[prev];
    qv += inc * inc;
    prev = i;
  }
  if (prev != last) {  // close the partition at the end of the range
    const double inc = path.Ldot[last] - path.Ldot[prev];
    qv += inc * inc;
  }
  return qv;
}

double extinction_exponent(const LocalTimePath& path, double window_lo,
                           double window_hi) {
  if (!(window_lo > 0.0) || !(window_hi > window_lo)) {
    throw DomainError("extinction_exponent: need 0 < window_lo < window_hi");
  }
  if (!std::isfinite(path.R_hat)) {
    throw DomainError("extinction_exponent: path was not absorbed");
  }

  double su = 0.0, sv = 0.0, suu = 0.0, suv = 0.0;
  std::size_t count = 0;
  const std::size_t n = path.x_grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double l = path.L[i];
    const double gap = path.R_hat - path.x_grid[i];
    if (l < window_lo || l > window_hi || !(gap > 0.0)) continue;
    const double u = std::log(gap);
    const double v = std::log(l);
    su += u;
    sv += v;
    suu += u * u;
    suv += u * v;
    ++count;
  }
  if (count < 10) {
    throw InsufficientDataError(
        "extinction_exponent: fewer than 10 grid points in the L-window "
        "(refine dx or widen the window)",
        static_cast<double>(count));
  }
  const auto cnt = static_cast<double>(count);
  const double var = suu - su * su / cnt;
  if (!(var > 0.0)) {
    throw InsufficientDataError(
        "extinction_exponent: degenerate abscissa spread in the window",
        static_cast<double>(count));
  }
  return (suv - su * sv / cnt) / var;
}

}  // namespace sbmlab::sde
