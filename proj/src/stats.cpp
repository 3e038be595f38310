#include "sbmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

namespace sbmlab::stats {

namespace {

void require_min_size(std::size_t n, const char* who) {
  if (n < 50) {
    throw DomainError(std::string(who) + ": need at least 50 samples, got " +
                      std::to_string(n));
  }
}

}  // namespace

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require_min_size(a.size(), "ks_two_sample (first sample)");
  require_min_size(b.size(), "ks_two_sample (second sample)");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Walk the pooled order statistics; at ties both step functions must jump
  // before the gap is measured.
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(double(i) / na - double(j) / nb));
  }
  return d;
}

double ks_vs_cdf(std::vector<double> a,
                 const std::function<double(double)>& cdf) {
  require_min_size(a.size(), "ks_vs_cdf");
  std::sort(a.begin(), a.end());
  const double n = double(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max(d, std::fabs(f - double(i + 1) / n));
    d = std::max(d, std::fabs(f - double(i) / n));
  }
  return d;
}

const BinCell& BinnedTable::densest() const {
  const BinCell* best = nullptr;
  for (const auto& c : cells) {
    if (!best || c.count > best->count) best = &c;
  }
  if (!best) {
    throw InsufficientDataError("binned table has no occupied cells", 0);
  }
  return *best;
}

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values,
                                            rng::Stream& stream,
                                            int resamples) {
  if (values.empty()) {
    throw InsufficientDataError("bootstrap_mean_ci: empty sample", 0);
  }
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto idx = std::size_t(stream.u01() * double(n));
      acc += values[idx < n ? idx : n - 1];
    }
    means[r] = acc / double(n);
  }
  std::sort(means.begin(), means.end());
  const auto lo_idx = std::size_t(0.025 * (resamples - 1));
  const auto hi_idx = std::size_t(std::ceil(0.975 * (resamples - 1)));
  return {means[lo_idx], means[hi_idx]};
}

BinnedTable binned_conditional_mean(
    const std::vector<std::pair<double, double>>& keys,
    const std::vector<double>& values, std::vector<double> edges_x,
    std::vector<double> edges_y, std::uint64_t master_seed) {
  if (keys.size() != values.size()) {
    throw DomainError("binned_conditional_mean: keys/values size mismatch");
  }
  if (edges_x.size() < 2 || edges_y.size() < 2) {
    throw DomainError("binned_conditional_mean: need at least one bin");
  }
  std::sort(edges_x.begin(), edges_x.end());
  std::sort(edges_y.begin(), edges_y.end());

  auto locate = [](const std::vector<double>& edges, double v) -> long {
    if (v < edges.front() || v >= edges.back()) return -1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return long(it - edges.begin()) - 1;
  };

  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> buckets;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const long ix = locate(edges_x, keys[k].first);
    const long iy = locate(edges_y, keys[k].second);
    if (ix < 0 || iy < 0) continue;
    buckets[{std::size_t(ix), std::size_t(iy)}].push_back(values[k]);
  }

  BinnedTable table;
  table.edges_x = std::move(edges_x);
  table.edges_y = std::move(edges_y);
  table.master_seed = master_seed;
  std::uint64_t cell_index = 0;
  for (auto& [key, vals] : buckets) {
    BinCell cell;
    cell.ix = key.first;
    cell.iy = key.second;
    cell.count = vals.size();
    double acc = 0.0;
    for (double v : vals) acc += v;
    cell.mean = acc / double(vals.size());
    cell.flagged = vals.size() < 30;
    rng::Stream stream = rng::Stream::derive(master_seed, cell_index++);
    const auto [lo, hi] = bootstrap_mean_ci(vals, stream);
    cell.ci_lo = lo;
    cell.ci_hi = hi;
    table.cells.push_back(cell);
  }
  return table;
}

bool ComparisonReport::recompute_pass() const {
  bool ok = ks <= ks_threshold;
  for (const auto& c : cis) ok = ok && c.hit;
  return ok;
}

std::string ComparisonReport::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["n_A"] = n_a;
  j["n_B"] = n_b;
  j["ks"] = ks;
  j["ks_threshold"] = ks_threshold;
  j["quantiles"] = nlohmann::json::array();
  for (const auto& q : quantiles) {
    j["quantiles"].push_back({{"p", q.p}, {"qA", q.q_a}, {"qB", q.q_b}});
  }
  j["cis"] = nlohmann::json::array();
  for (const auto& c : cis) {
    j["cis"].push_back({{"name", c.name},
                        {"lo", c.lo},
                        {"hi", c.hi},
                        {"target", c.target},
                        {"hit", c.hit}});
  }
  j["pass"] = pass;
  j["master_seed"] = master_seed;
  return j.dump(2);
}

ComparisonReport ComparisonReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ComparisonReport r;
  r.id = j.at("id").get<std::string>();
  r.n_a = j.at("n_A").get<std::size_t>();
  r.n_b = j.at("n_B").get<std::size_t>();
  r.ks = j.at("ks").get<double>();
  r.ks_threshold = j.at("ks_threshold").get<double>();
  for (const auto& q : j.at("quantiles")) {
    r.quantiles.push_back({q.at("p").get<double>(), q.at("qA").get<double>(),
                           q.at("qB").get<double>()});
  }
  for (const auto& c : j.at("cis")) {
    r.cis.push_back({c.at("name").get<std::string>(), c.at("lo").get<double>(),
                     c.at("hi").get<double>(), c.at("target").get<double>(),
                     c.at("hit").get<bool>()});
  }
  r.pass = j.at("pass").get<bool>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
  return r;
}

double empirical_quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw InsufficientDataError("empirical_quantile: empty", 0);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("empirical_quantile: p outside [0,1]");
  }
  std::sort(xs.begin(), xs.end());
  const double pos = p * double(xs.size() - 1);
  const auto lo = std::size_t(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - double(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

}  // namespace sbmlab::stats
