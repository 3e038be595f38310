#include "sbmlab/particleoracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sbmlab/drift.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/sdeengine.hpp"

namespace sbmlab::particle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Boundary {
  double time = 0.0;
  bool thin = false;
  bool snap = false;
};

std::size_t band_count(const ParticleConfig& cfg) {
  const double span = cfg.window_hi - cfg.window_lo;
  const auto nb = static_cast<long long>(std::llround(span / cfg.w));
  if (nb < 5 || std::fabs(static_cast<double>(nb) * cfg.w - span) >
                    1e-9 * (span + 1.0)) {
    throw DomainError(
        "simulate_particles: window must span a whole number (>= 5) of bands");
  }
  return static_cast<std::size_t>(nb);
}

void validate(const ParticleConfig& cfg) {
  if (!std::isfinite(cfg.alpha) || !(cfg.alpha > 0.0)) {
    throw DomainError("simulate_particles: alpha must be > 0");
  }
  if (cfg.N < 1000) {
    throw DomainError("simulate_particles: need N >= 1000");
  }
  if (!(cfg.dt > 0.0) || cfg.dt > 1e-3) {
    throw DomainError("simulate_particles: dt must lie in (0, 1e-3]");
  }
  if (!std::isfinite(cfg.window_lo) || !std::isfinite(cfg.window_hi) ||
      !(cfg.window_hi > cfg.window_lo)) {
    throw DomainError("simulate_particles: invalid window");
  }
  if (!(cfg.w >= 2.0 * std::sqrt(cfg.dt))) {
    throw DomainError(
        "simulate_particles: bandwidth must be >= 2 sqrt(dt) to resolve the "
        "diffusion step");
  }
  const double rho = 4.0 * static_cast<double>(cfg.N) / cfg.alpha;
  if (rho * cfg.dt > 0.05 * (1.0 + 1e-12)) {
    throw DomainError(
        "simulate_particles: branching probability rho*dt exceeds 0.05; "
        "reduce dt (or N/alpha)");
  }
  if (!std::isfinite(cfg.horizon) || !(cfg.horizon >= cfg.dt)) {
    throw DomainError("simulate_particles: horizon must be >= dt");
  }
  for (double s : cfg.snapshot_times) {
    if (!(s > 0.0) || s > cfg.horizon) {
      throw DomainError(
          "simulate_particles: snapshot times must lie in (0, horizon]");
    }
  }
  for (double s : cfg.thin_times) {
    if (!(s > 0.0)) {
      throw DomainError("simulate_particles: thinning times must be > 0");
    }
  }
  if (cfg.max_alive < static_cast<std::size_t>(cfg.N)) {
    throw DomainError("simulate_particles: max_alive below initial N");
  }
  band_count(cfg);
}

std::vector<Boundary> build_boundaries(const ParticleConfig& cfg) {
  std::vector<Boundary> out;
  const auto upsert = [&out](double t, bool thin, bool snap) {
    for (auto& b : out) {
      if (std::fabs(b.time - t) < 1e-12) {
        b.thin = b.thin || thin;
        b.snap = b.snap || snap;
        return;
      }
    }
    out.push_back({t, thin, snap});
  };
  for (double t : cfg.thin_times) {
    if (t < cfg.horizon - 1e-12) upsert(t, true, false);
  }
  for (double t : cfg.snapshot_times) upsert(t, false, true);
  upsert(cfg.horizon, false, false);
  std::sort(out.begin(), out.end(),
            [](const Boundary& a, const Boundary& b) { return a.time < b.time; });
  return out;
}

}  // namespace

ParticleCloud make_cloud(double alpha, int N) {
  if (!std::isfinite(alpha) || !(alpha > 0.0)) {
    throw DomainError("make_cloud: alpha must be > 0");
  }
  if (N < 1000) {
    throw DomainError("make_cloud: need N >= 1000");
  }
  ParticleCloud cloud;
  cloud.positions.assign(static_cast<std::size_t>(N), 0.0);
  cloud.particle_mass = alpha / static_cast<double>(N);
  cloud.branch_rate = 4.0 * static_cast<double>(N) / alpha;
  cloud.time = 0.0;
  cloud.alive = static_cast<std::size_t>(N);
  return cloud;
}

ParticleRun simulate_particles(const ParticleConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const std::size_t nb = band_count(cfg);
  const double lo = cfg.window_lo;
  const double hi = cfg.window_hi;
  const double inv_w = 1.0 / cfg.w;

  rng::Stream stream(seed);
  std::vector<double> positions(static_cast<std::size_t>(cfg.N), 0.0);
  positions.reserve(2 * positions.size());
  double mass = cfg.alpha / static_cast<double>(cfg.N);
  double rho = 4.0 / mass;
  double dt_cur = cfg.dt;

  ParticleRun run;
  run.seed = seed;
  run.peak_alive = positions.size();
  run.record.bandwidth = cfg.w;
  run.record.horizon = cfg.horizon;
  run.record.band_centers.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    run.record.band_centers[i] = lo + (static_cast<double>(i) + 0.5) * cfg.w;
  }
  run.record.occupation.assign(nb, 0.0);
  std::vector<double> counts(nb, 0.0);
  std::vector<std::size_t> selected;

  const auto flush = [&](double scale) {
    for (std::size_t i = 0; i < nb; ++i) {
      run.record.occupation[i] += counts[i] * scale;
      counts[i] = 0.0;
    }
  };

  const auto boundaries = build_boundaries(cfg);
  // After extinction the measure is identically zero: report the remaining
  // snapshot times as empty populations rather than omitting them.
  const auto pad_snapshots = [&run, &boundaries](std::size_t from) {
    for (std::size_t k = from; k < boundaries.size(); ++k) {
      if (boundaries[k].snap) {
        run.snapshots.push_back({boundaries[k].time, 0.0, {}});
      }
    }
  };

  double t = 0.0;
  for (std::size_t bi = 0; bi < boundaries.size(); ++bi) {
    const Boundary& boundary = boundaries[bi];
    const double span = boundary.time - t;
    auto n_seg = std::max<long long>(1, std::llround(span / dt_cur));
    while (rho * (span / static_cast<double>(n_seg)) > 0.05 * (1.0 + 1e-9)) {
      ++n_seg;
    }
    const double dt_seg = span / static_cast<double>(n_seg);
    const double sqrt_dt = std::sqrt(dt_seg);
    const double p_branch = rho * dt_seg;
    const double inv_log1mp = 1.0 / std::log1p(-p_branch);

    for (long long step = 1; step <= n_seg; ++step) {
      // Move every particle and tally band occupation (counts are scaled by
      // mass * dt at segment flush).
      const std::size_t alive = positions.size();
      run.particle_steps += static_cast<double>(alive);
      for (std::size_t i = 0; i < alive; ++i) {
        const double pos = positions[i] + sqrt_dt * stream.normal();
        positions[i] = pos;
        if (pos >= lo && pos < hi) {
          auto band = static_cast<std::size_t>((pos - lo) * inv_w);
          if (band >= nb) band = nb - 1;  // guard the hi-edge rounding
          counts[band] += 1.0;
        }
      }

      // Branch events: each particle independently with probability rho*dt,
      // selected by geometric index skips, then resolved in descending index
      // order so swap-removal never invalidates a pending selection.
      selected.clear();
      long long idx = -1;
      for (;;) {
        const double skip = std::floor(std::log(stream.upos()) * inv_log1mp);
        if (skip > static_cast<double>(alive)) break;
        idx += 1 + static_cast<long long>(skip);
        if (idx >= static_cast<long long>(alive)) break;
        selected.push_back(static_cast<std::size_t>(idx));
      }
      for (auto it = selected.rbegin(); it != selected.rend(); ++it) {
        if (stream.next() & 1ull) {
          positions.push_back(positions[*it]);
        } else {
          positions[*it] = positions.back();
          positions.pop_back();
        }
      }

      if (positions.size() > cfg.max_alive) {
        throw ResourceError(
            "simulate_particles: population exceeded the max_alive budget "
            "(retry with a fresh seed is legitimate; record the retry)");
      }
      run.peak_alive = std::max(run.peak_alive, positions.size());
      if (positions.empty()) {
        run.extinction_time = t + static_cast<double>(step) * dt_seg;
        flush(mass * dt_seg);
        pad_snapshots(bi);
        return run;
      }
    }

    t = boundary.time;
    flush(mass * dt_seg);

    if (boundary.snap) {
      Snapshot snap;
      snap.time = t;
      snap.total_mass = mass * static_cast<double>(positions.size());
      snap.positions = positions;
      run.snapshots.push_back(std::move(snap));
    }

    if (boundary.thin) {
      std::size_t keep = 0;
      for (std::size_t i = 0; i < positions.size(); ++i) {
        if (stream.next() & 1ull) positions[keep++] = positions[i];
      }
      positions.resize(keep);
      mass *= 2.0;
      rho *= 0.5;
      if (cfg.grow_dt_on_thin) {
        dt_cur = std::min({dt_cur * 2.0, 0.25 * cfg.w * cfg.w, 1e-3});
      }
      if (positions.empty()) {
        run.extinction_time = t;
        pad_snapshots(bi + 1);
        return run;
      }
    }
  }
  return run;  // survived to the horizon: extinction_time stays +inf
}

std::pair<double, double> local_time_samples(const OccupationRecord& record,
                                             double a) {
  const std::size_t nb = record.band_centers.size();
  if (nb < 5 || record.occupation.size() != nb || !(record.bandwidth > 0.0)) {
    throw DomainError("local_time_samples: malformed occupation record");
  }
  const double w = record.bandwidth;
  const double lo = record.band_centers.front() - 0.5 * w;
  if (!std::isfinite(a)) {
    throw DomainError("local_time_samples: abscissa must be finite");
  }
  const double offset = (a - lo) / w;
  const auto idx = static_cast<long long>(std::floor(offset));
  if (idx < 2 || idx > static_cast<long long>(nb) - 3) {
    throw DomainError(
        "local_time_samples: abscissa must sit >= 2 bands inside the window");
  }
  const auto i = static_cast<std::size_t>(idx);
  const double l_hat = record.occupation[i] / w;
  const double ldot_hat =
      (record.occupation[i + 1] - record.occupation[i - 1]) / (2.0 * w * w);
  return {l_hat, ldot_hat};
}

OccupationRecord coarsen_bands(const OccupationRecord& record) {
  const std::size_t nb = record.band_centers.size();
  if (nb < 8 || nb % 2 != 0 || record.occupation.size() != nb) {
    throw DomainError(
        "coarsen_bands: need an even number (>= 8) of consistent bands");
  }
  OccupationRecord out;
  out.bandwidth = 2.0 * record.bandwidth;
  out.horizon = record.horizon;
  out.band_centers.resize(nb / 2);
  out.occupation.resize(nb / 2);
  for (std::size_t i = 0; i < nb / 2; ++i) {
    out.band_centers[i] =
        0.5 * (record.band_centers[2 * i] + record.band_centers[2 * i + 1]);
    out.occupation[i] =
        record.occupation[2 * i] + record.occupation[2 * i + 1];
  }
  return out;
}

stats::ComparisonReport transition_comparison(double a0, double delta, int n,
                                              const TransitionConfig& cfg,
                                              std::uint64_t seed) {
  validate(cfg.particles);
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw DomainError("transition_comparison: delta must be >= 0");
  }
  if (delta > 0.0 && delta < cfg.dx) {
    throw DomainError("transition_comparison: delta must be >= dx");
  }
  if (!(cfg.drift_h >= 2.0 * cfg.particles.w)) {
    throw DomainError(
        "transition_comparison: drift_h must be >= 2 bandwidths so the "
        "derivative stencils at a0 and a0 + drift_h do not overlap");
  }
  if (n < 1) {
    throw DomainError("transition_comparison: need n >= 1 replicates");
  }

  std::vector<double> a_L, a_Ld, b_L, b_Ld, drift_vals;
  std::vector<std::pair<double, double>> keys;
  std::size_t retries = 0;

  for (int r = 0; r < n; ++r) {
    ParticleRun run;
    std::uint64_t rep_seed = rng::Stream::derive_seed(seed, r);
    for (int attempt = 0;; ++attempt) {
      try {
        run = simulate_particles(cfg.particles, rep_seed);
        break;
      } catch (const ResourceError&) {
        if (attempt >= 3) throw;
        ++retries;
        rep_seed = rng::Stream::derive_seed(rep_seed, 0xEE);
      }
    }
    const auto [l0, ld0] = local_time_samples(run.record, a0);
    if (!(l0 > cfg.survival_threshold)) continue;
    const auto [l1, ld1] = local_time_samples(run.record, a0 + delta);
    a_L.push_back(l1);
    a_Ld.push_back(ld1);
    keys.emplace_back(l0, ld0);
    const auto [lh, ldh] = local_time_samples(run.record, a0 + cfg.drift_h);
    drift_vals.push_back((ldh - ld0) / cfg.drift_h);

    if (delta > 0.0) {
      const auto path = sde::simulate_main_sde(
          l0, ld0, delta, cfg.dx,
          rng::Stream::derive_seed(seed ^ 0x5DE5DE5DEull, r));
      b_L.push_back(path.L.back());
      b_Ld.push_back(path.Ldot.back());
    }
  }

  const std::size_t survivors = a_L.size();
  if (survivors < 200) {
    throw InsufficientDataError(
        "transition_comparison: fewer than 200 replicates survived the "
        "conditioning threshold",
        static_cast<double>(survivors));
  }
  if (delta == 0.0) {
    b_L = a_L;
    b_Ld = a_Ld;
  }

  stats::ComparisonReport report;
  report.id = "particle_vs_sde_transition";
  if (retries > 0) {
    report.id += ";retries=" + std::to_string(retries);
  }
  report.n_a = survivors;
  report.n_b = b_L.size();
  report.master_seed = seed;
  report.ks = std::max(stats::ks_two_sample(a_L, b_L),
                       stats::ks_two_sample(a_Ld, b_Ld));
  report.ks_threshold = cfg.ks_threshold;

  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    report.quantiles.push_back({p, stats::empirical_quantile(a_L, p),
                                stats::empirical_quantile(b_L, p)});
  }
  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    report.quantiles.push_back({p, stats::empirical_quantile(a_Ld, p),
                                stats::empirical_quantile(b_Ld, p)});
  }

  // Conditional drift of the particle increments over drift_h, binned by the
  // conditioning state, checked at the densest bin against the limiting
  // drift g(L, Ldot/2).
  std::vector<double> key_l, key_ld;
  for (const auto& k : keys) {
    key_l.push_back(k.first);
    key_ld.push_back(k.second);
  }
  const auto edges_of = [](std::vector<double> v) {
    std::vector<double> e;
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      e.push_back(stats::empirical_quantile(v, p));
    }
    e.front() -= 1e-9;
    e.back() += 1e-9;
    return e;
  };
  const auto table = stats::binned_conditional_mean(
      keys, drift_vals, edges_of(key_l), edges_of(key_ld), seed);
  const auto& cell = table.densest();
  const double t_c =
      0.5 * (table.edges_x[cell.ix] + table.edges_x[cell.ix + 1]);
  const double y_c =
      0.5 * (table.edges_y[cell.iy] + table.edges_y[cell.iy + 1]);
  stats::CiEntry entry;
  entry.name = "conditional_drift_densest_bin";
  entry.lo = cell.ci_lo;
  entry.hi = cell.ci_hi;
  entry.target = drift::g(t_c, 0.5 * y_c);
  entry.hit = entry.lo <= entry.target && entry.target <= entry.hi;
  report.cis.push_back(entry);

  report.pass = report.recompute_pass();
  return report;
}

}  // namespace sbmlab::particle
