#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sbmlab/errors.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab::stats {

// --------------------------------------------------------------------------
// Kolmogorov-Smirnov distances
// --------------------------------------------------------------------------

// Sup-norm distance between the empirical CDFs of A and B.
// Requires |A|, |B| >= 50; symmetric in its arguments; deterministic.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample KS distance of A against a monotone CDF.
double ks_vs_cdf(std::vector<double> a,
                 const std::function<double(double)>& cdf);

// --------------------------------------------------------------------------
// Binned conditional means with bootstrap CIs
// --------------------------------------------------------------------------

struct BinCell {
  std::size_t ix = 0;          // bin index along the first key coordinate
  std::size_t iy = 0;          // bin index along the second key coordinate
  std::size_t count = 0;
  double mean = 0.0;
  double ci_lo = 0.0;          // 95% bootstrap CI (1000 resamples, seeded)
  double ci_hi = 0.0;
  bool flagged = false;        // true when count < 30: excluded from pass/fail
};

struct BinnedTable {
  std::vector<double> edges_x;
  std::vector<double> edges_y;
  std::vector<BinCell> cells;  // only non-empty bins
  std::uint64_t master_seed = 0;

  // Cell with the largest count (throws InsufficientDataError if none).
  const BinCell& densest() const;
};

// Keys are 2-D points; values are averaged per rectangular bin.
// Bins with fewer than 30 points are emitted flagged.
BinnedTable binned_conditional_mean(
    const std::vector<std::pair<double, double>>& keys,
    const std::vector<double>& values, std::vector<double> edges_x,
    std::vector<double> edges_y, std::uint64_t master_seed);

// --------------------------------------------------------------------------
// Bootstrap helpers
// --------------------------------------------------------------------------

// 95% percentile bootstrap CI for the mean of `values` (1000 resamples).
std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values,
                                            rng::Stream& stream,
                                            int resamples = 1000);

// --------------------------------------------------------------------------
// Comparison reports
// --------------------------------------------------------------------------

struct QuantileRow {
  double p = 0.0;
  double q_a = 0.0;
  double q_b = 0.0;
};

struct CiEntry {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  double target = 0.0;
  bool hit = false;
};

struct ComparisonReport {
  std::string id;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double ks = 0.0;
  double ks_threshold = 0.0;
  std::vector<QuantileRow> quantiles;
  std::vector<CiEntry> cis;
  bool pass = false;
  std::uint64_t master_seed = 0;

  // pass = (ks <= ks_threshold) and every CI entry hit.
  // Re-derives the pass verdict from the stored statistics: the KS value
  // must sit at or below its threshold and every interval must hit its
  // target.
  bool recompute_pass() const;
  std::string to_json() const;
  static ComparisonReport from_json(const std::string& text);
};

// Empirical quantile (linear interpolation between order statistics).
double empirical_quantile(std::vector<double> sorted_or_not, double p);

}  // namespace sbmlab::stats
