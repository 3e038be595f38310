#pragma once

// Branching-particle approximation of the measure-valued branching diffusion
// started from alpha * delta_0 -- the independent ground-truth route against
// which the SDE simulations are validated.
//
// Model: N particles of mass alpha/N start at the origin.  Each performs an
// independent Brownian motion (increment sqrt(dt) N(0,1) per step) and
// branches at per-particle rate rho = 4N/alpha, splitting or dying with
// equal probability.  The calibration rho * mass = 4 matches the variance
// flux of the limiting martingale measure; it is *verified* by the
// total-mass variance test, not assumed.
//
// The occupation measure is tallied into spatial bands of width w; band
// occupation / w estimates the local time L^a, and a central difference
// across neighbouring bands estimates its spatial derivative.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sbmlab/errors.hpp"
#include "sbmlab/stats.hpp"

namespace sbmlab::particle {

// Exchangeable particle population with the branching calibration
// rho * particle_mass = 4.
struct ParticleCloud {
  std::vector<double> positions;
  double particle_mass = 0.0;
  double branch_rate = 0.0;  // per-particle exponential rate rho
  double time = 0.0;
  std::size_t alive = 0;     // == positions.size()
};

// Initial cloud for total mass alpha spread over N unit-position particles.
ParticleCloud make_cloud(double alpha, int N);

// Banded occupation tally: occupation[i] approximates the mass*time the
// population spent in band i over [0, horizon].
struct OccupationRecord {
  std::vector<double> band_centers;
  double bandwidth = 0.0;
  std::vector<double> occupation;
  double horizon = 0.0;
};

// Population state captured at a requested time (before any thinning
// scheduled at the same instant).
struct Snapshot {
  double time = 0.0;
  double total_mass = 0.0;
  std::vector<double> positions;  // each carries total_mass / positions.size()
};

struct ParticleRun {
  OccupationRecord record;
  // First time the population hit zero; +inf when still alive at the
  // horizon (censored).
  double extinction_time = std::numeric_limits<double>::infinity();
  std::vector<Snapshot> snapshots;
  std::size_t peak_alive = 0;
  // Total particle-position updates performed (work metric).
  double particle_steps = 0.0;
  std::uint64_t seed = 0;
};

struct ParticleConfig {
  double alpha = 1.0;
  int N = 1000;
  double dt = 1.25e-5;       // base step; rho * dt must stay <= 0.05
  double window_lo = -3.2;
  double window_hi = 3.2;
  double w = 0.0125;         // bandwidth; must be >= 2 sqrt(dt)
  double horizon = 32.0;
  std::vector<double> snapshot_times = {1.0};
  // Mass-doubling schedule: at each listed time the population is binomially
  // halved, particle mass doubles and the branch rate halves (the
  // calibration rho * mass = 4 is preserved).  Controls the cost of the
  // heavy-tailed occupation integral on [1, horizon].
  std::vector<double> thin_times = {1.0, 2.0, 4.0, 8.0, 16.0};
  // After each thinning the step may double as well (rho halved keeps
  // rho * dt <= 0.05), capped at (w/2)^2 so bands keep resolving the
  // diffusion step, and at the 1e-3 ceiling.
  bool grow_dt_on_thin = true;
  std::size_t max_alive = 2'000'000;  // memory budget -> ResourceError
};

// One replicate.  Deterministic in (config, seed).  Throws DomainError on
// invalid configuration and ResourceError if the population exceeds the
// budget (a legitimate outcome for critical branching; retry with a fresh
// seed and record the retry).
ParticleRun simulate_particles(const ParticleConfig& cfg, std::uint64_t seed);

// Histogram estimators at abscissa a (>= 2 bands inside the window):
//   L_hat    = occupation(band of a) / w,
//   Ldot_hat = (L_hat at a+w - L_hat at a-w) / (2w).
// Throws DomainError when a is outside the banded window margin.
std::pair<double, double> local_time_samples(const OccupationRecord& record,
                                             double a);

// Merge adjacent band pairs: bandwidth doubles, occupation adds.  Used for
// bandwidth-consistency checks (w vs w/2 from a single simulation).
OccupationRecord coarsen_bands(const OccupationRecord& record);

struct TransitionConfig {
  ParticleConfig particles;
  double dx = 2e-4;                // main-SDE step for the evolved route
  double survival_threshold = 0.1; // replicate enters the comparison if
                                   // L_hat(a0) exceeds this
  double ks_threshold = 0.06;      // pilot-calibrated budget, recorded
  double drift_h = 0.05;           // offset for the conditional-drift check
};

// The transition-law cross-check pipeline:
//   1. n particle replicates; record (L_hat, Ldot_hat) at a0 and a0+delta;
//   2. per surviving replicate, run the main SDE from (L_hat, Ldot_hat) at
//      a0 over a spatial stretch delta;
//   3. compare the two samples at a0+delta: per-marginal KS (the report's
//      ks field is the worse of the two), quantile table (5/25/50/75/95 for
//      the L marginal then the Ldot marginal), and a binned conditional
//      drift check of particle increments over drift_h against the limiting
//      drift g at the densest bin.
// delta = 0 short-circuits to the degenerate identity comparison.
// Fewer than 200 surviving replicates raises InsufficientDataError.
stats::ComparisonReport transition_comparison(double a0, double delta, int n,
                                              const TransitionConfig& cfg,
                                              std::uint64_t seed);

}  // namespace sbmlab::particle
