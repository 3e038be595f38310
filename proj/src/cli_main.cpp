// Command-line front end: six experiments (selfcheck, density, sde,
// particles, compare, bridge) over the core library, with a plain key=value
// config file, deterministic replicate seeding, a worker pool for replicate
// loops, and atomically written CSV/JSON artifacts plus a manifest.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sbmlab/drift.hpp"
#include "sbmlab/errors.hpp"
#include "sbmlab/identities.hpp"
#include "sbmlab/io.hpp"
#include "sbmlab/particleoracle.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/sdeengine.hpp"
#include "sbmlab/specfun.hpp"
#include "sbmlab/stabledist.hpp"
#include "sbmlab/stats.hpp"
#include "sbmlab/version.hpp"

namespace {

using nlohmann::json;
using namespace sbmlab;

// ---------------------------------------------------------------------------
// Strict value parsing (config files and env vars go through these, so typos
// surface as usage errors instead of silently becoming defaults).
// ---------------------------------------------------------------------------

double parse_double(const std::string& s) {
  if (s.empty()) throw ConfigError("expected a number, got an empty string");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw ConfigError("cannot parse '" + s + "' as a number");
  }
  return v;
}

long long parse_int(const std::string& s) {
  if (s.empty()) throw ConfigError("expected an integer, got an empty string");
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) {
    throw ConfigError("cannot parse '" + s + "' as an integer");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty()) throw ConfigError("expected an integer, got an empty string");
  if (s[0] == '-') throw ConfigError("seed must be nonnegative, got '" + s + "'");
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) {
    throw ConfigError("cannot parse '" + s + "' as an integer");
  }
  return v;
}

std::vector<double> parse_colon_tuple(const std::string& s, std::size_t n,
                                      const std::string& what) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(':', pos);
    const std::string tok =
        s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    parts.push_back(parse_double(tok));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() != n) {
    throw ConfigError(what + ": expected " + std::to_string(n) +
                      " colon-separated numbers, got '" + s + "'");
  }
  return parts;
}

int default_workers() {
  const char* env = std::getenv("SBMLAB_WORKERS");
  if (!env || !*env) return 1;
  const long long v = parse_int(env);
  if (v < 1) throw ConfigError("SBMLAB_WORKERS must be >= 1");
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// Config-file merge: each subcommand declares its keys once; values from
// --config apply wherever the command line did not set the flag explicitly.
// Accepts either the plain key=value format or a previously written
// manifest.json (whose "parameters" object echoes the resolved config).
// ---------------------------------------------------------------------------

class OptionSet {
 public:
  explicit OptionSet(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_,
                    "key=value file or a previous manifest.json; explicit "
                    "flags take precedence over file values");
  }

  template <class T>
  CLI::Option* bind(const std::string& key, T* var, const std::string& desc) {
    CLI::Option* opt = cmd_->add_option("--" + key, *var, desc);
    entries_.push_back(
        {key, opt, [var](const std::string& s) { assign(s, var); },
         [var]() { return echo(*var); }});
    return opt;
  }

  // Applies the config file (if any) and returns the fully resolved
  // key -> value list in declaration order.
  std::vector<std::pair<std::string, std::string>> resolve(
      const std::string& experiment) {
    if (!config_path_.empty()) apply_file(experiment);
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.emplace_back(e.key, e.echo_fn());
    return out;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const std::string&)> apply_fn;
    std::function<std::string()> echo_fn;
  };

  static void assign(const std::string& s, double* var) { *var = parse_double(s); }
  static void assign(const std::string& s, int* var) {
    const long long v = parse_int(s);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError("integer out of range: '" + s + "'");
    }
    *var = static_cast<int>(v);
  }
  static void assign(const std::string& s, long long* var) { *var = parse_int(s); }
  static void assign(const std::string& s, std::uint64_t* var) { *var = parse_u64(s); }
  static void assign(const std::string& s, std::string* var) { *var = s; }

  static std::string echo(double v) { return io::format_full(v); }
  static std::string echo(int v) { return std::to_string(v); }
  static std::string echo(long long v) { return std::to_string(v); }
  static std::string echo(std::uint64_t v) { return std::to_string(v); }
  static std::string echo(const std::string& v) { return v; }

  Entry* find(const std::string& key) {
    for (auto& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }

  void apply_file(const std::string& experiment) {
    std::map<std::string, std::string> kv;
    {
      std::ifstream probe(config_path_);
      if (!probe) throw ConfigError("config: cannot read " + config_path_);
      char first = 0;
      probe >> std::ws;
      probe.get(first);
      if (first == '{') {
        kv = load_manifest(experiment);
      } else {
        kv = io::read_key_value_file(config_path_);
      }
    }
    for (const auto& [key, value] : kv) {
      Entry* e = find(key);
      if (!e) {
        if (key == "experiment") {
          if (value != experiment) {
            throw ConfigError("config: file is for experiment '" + value +
                              "', but '" + experiment + "' was invoked");
          }
          continue;
        }
        throw ConfigError("config: unknown key '" + key +
                          "' for experiment '" + experiment + "'");
      }
      if (e->opt->count() == 0) {
        try {
          e->apply_fn(value);
        } catch (const ConfigError& err) {
          throw ConfigError("config: key '" + key + "': " + err.what());
        }
      }
    }
  }

  std::map<std::string, std::string> load_manifest(
      const std::string& experiment) {
    std::ifstream in(config_path_);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config: " + config_path_ + ": " + e.what());
    }
    if (j.contains("experiment") && j["experiment"] != experiment) {
      throw ConfigError("config: manifest is for experiment '" +
                        j["experiment"].get<std::string>() + "', but '" +
                        experiment + "' was invoked");
    }
    std::map<std::string, std::string> kv;
    if (j.contains("parameters")) {
      for (const auto& [key, value] : j["parameters"].items()) {
        kv[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    return kv;
  }

  CLI::App* cmd_;
  std::string config_path_;
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Run context and manifest
// ---------------------------------------------------------------------------

struct RunContext {
  std::string experiment;
  std::string output_dir;
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> artifacts;
  json run_info = json::object();

  std::string out_path(const std::string& name) const {
    return output_dir + "/" + name;
  }
};

void write_manifest(const RunContext& ctx, const std::string& status,
                    const std::string& error) {
  json j;
  j["tool"] = "sbmlab " SBMLAB_VERSION_STRING;
  j["experiment"] = ctx.experiment;
  json params = json::object();
  for (const auto& [k, v] : ctx.params) params[k] = v;
  j["parameters"] = params;
  j["master_seed"] = ctx.master_seed;
  j["workers"] = ctx.workers;
  j["output_dir"] = ctx.output_dir;
  j["artifacts"] = ctx.artifacts;
  if (!ctx.run_info.empty()) j["run"] = ctx.run_info;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  // The sole nondeterministic field; everything else reruns byte-identically.
  j["timestamp_utc"] = io::timestamp_utc_now();
  io::write_file_atomic(ctx.out_path("manifest.json"), j.dump(2) + "\n");
}

// Runs work(r) for r in [0, n); workers > 1 computes batches concurrently,
// but consume(r, result) always executes on this thread in index order, so
// aggregation and artifact bytes are identical for every worker count.
template <class Result, class Work, class Consume>
void run_replicates(int n, int workers, Work&& work, Consume&& consume) {
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    for (int r = 0; r < n; ++r) consume(r, work(r));
    return;
  }
  for (int base = 0; base < n; base += w) {
    const int k = std::min(w, n - base);
    std::vector<Result> results(static_cast<std::size_t>(k));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      threads.emplace_back([&, i] {
        try {
          results[static_cast<std::size_t>(i)] = work(base + i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (int i = 0; i < k; ++i) {
      if (errors[static_cast<std::size_t>(i)]) {
        std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
      }
      consume(base + i, std::move(results[static_cast<std::size_t>(i)]));
    }
  }
}

json quantile_json(std::vector<double> v) {
  json q = json::object();
  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    char key[8];
    std::snprintf(key, sizeof(key), "%.2f", p);
    q[key] = v.empty() ? json() : json(stats::empirical_quantile(v, p));
  }
  return q;
}

std::string fd(double v) { return io::format_full(v); }

// ---------------------------------------------------------------------------
// selfcheck
// ---------------------------------------------------------------------------

bool run_selfcheck(RunContext& ctx) {
  const auto rows = identities::identity_suite();
  io::CsvWriter csv(ctx.out_path("selfcheck.csv"),
                    {"identity", "computed", "expected", "abs_err"});
  json jrows = json::array();
  std::size_t n_hit = 0;
  for (const auto& row : rows) {
    csv.row({row.name, fd(row.computed), fd(row.expected), fd(row.abs_err())});
    jrows.push_back({{"identity", row.name},
                     {"computed", row.computed},
                     {"expected", row.expected},
                     {"abs_err", row.abs_err()},
                     {"abs_tol", row.abs_tol},
                     {"hit", row.hit()}});
    if (row.hit()) ++n_hit;
  }
  csv.finalize();
  ctx.artifacts.push_back("selfcheck.csv");

  const bool pass = n_hit == rows.size();
  json report;
  report["rows"] = jrows;
  report["n_rows"] = rows.size();
  report["n_hit"] = n_hit;
  report["gamma_bound_constant_estimate"] =
      identities::gamma_bound_constant_estimate();
  report["pass"] = pass;
  io::write_file_atomic(ctx.out_path("selfcheck_report.json"),
                        report.dump(2) + "\n");
  ctx.artifacts.push_back("selfcheck_report.json");

  std::printf("selfcheck: %zu/%zu identities hit\n", n_hit, rows.size());
  return pass;
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

struct DensityOpts {
  std::string grid = "-8:8:0.1";
  long long fourier_check = 0;
  double fourier_rel_tol = 1e-8;
};

bool run_density(RunContext& ctx, const DensityOpts& o) {
  const auto g = parse_colon_tuple(o.grid, 3, "grid");
  const double lo = g[0], hi = g[1], step = g[2];
  if (!(step > 0.0) || !(hi >= lo)) {
    throw ConfigError("grid: need lo <= hi and step > 0");
  }
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  if (n > 2'000'000) throw ConfigError("grid: too many points");

  std::vector<std::string> header = {"y",    "p1", "p1_prime", "ratio",
                                     "g_t1", "b",  "nu"};
  if (o.fourier_check) header.push_back("p1_fourier");
  io::CsvWriter density(ctx.out_path("density.csv"), header);
  io::CsvWriter table(ctx.out_path("drift_table.csv"), {"z", "b", "nu", "s"});

  for (long long i = 0; i <= n; ++i) {
    const double y = lo + static_cast<double>(i) * step;
    std::vector<std::string> cells = {
        fd(y),
        fd(stabledist::p1(y)),
        fd(stabledist::p1_prime(y)),
        fd(stabledist::ratio_r(y)),
        fd(drift::g(1.0, y)),
        fd(drift::b(y)),
        fd(drift::invariant_density(y))};
    if (o.fourier_check) {
      cells.push_back(fd(stabledist::p1_fourier(y, o.fourier_rel_tol)));
    }
    density.row(cells);

    std::string s_cell;
    try {
      s_cell = fd(drift::scale_function(y));
    } catch (const RangeError&) {
      s_cell = y > 0 ? "inf" : "-inf";  // monotone growth beyond double range
    }
    table.row({fd(y), fd(drift::b(y)), fd(drift::invariant_density(y)), s_cell});
  }
  density.finalize();
  table.finalize();
  ctx.artifacts.push_back("density.csv");
  ctx.artifacts.push_back("drift_table.csv");
  std::printf("density: %lld rows over [%s, %s]\n", n + 1, fd(lo).c_str(),
              fd(hi).c_str());
  return true;
}

// ---------------------------------------------------------------------------
// sde
// ---------------------------------------------------------------------------

struct SdeOpts {
  std::string mode = "main";
  std::string out = "paths.csv";
  double t0 = 1.0;
  double ydot0 = 0.0;
  double z0 = 0.0;
  double lambda0 = 1.0;
  double dx = 1e-4;
  double dt = 1e-3;
  double xmax = 50.0;
  double tmax = 50.0;
  double eps_stop = 1e-6;
  int paths = 8;
  long long csv_stride = 1;
};

bool run_sde(RunContext& ctx, const SdeOpts& o) {
  if (o.mode != "main" && o.mode != "z" && o.mode != "reconstruct") {
    throw ConfigError("mode must be one of main, z, reconstruct");
  }
  if (o.paths < 1) throw ConfigError("paths must be >= 1");
  if (o.csv_stride < 1) throw ConfigError("csv_stride must be >= 1");
  const auto stride = static_cast<std::size_t>(o.csv_stride);

  if (o.mode == "z") {
    io::CsvWriter csv(ctx.out_path(o.out), {"replicate", "t", "Z", "Lambda"});
    std::vector<double> fz, flam, ft;
    run_replicates<sde::ZDiffusionPath>(
        o.paths, ctx.workers,
        [&](int r) {
          return sde::simulate_z(o.z0, o.lambda0, o.tmax, o.dt,
                                 rng::Stream::derive_seed(ctx.master_seed,
                                                          static_cast<std::uint64_t>(r)),
                                 sde::Horizon::adaptive_tail, stride);
        },
        [&](int r, sde::ZDiffusionPath path) {
          const std::string rep = std::to_string(r);
          for (std::size_t i = 0; i < path.t_grid.size(); ++i) {
            csv.row({rep, fd(path.t_grid[i]), fd(path.Z[i]), fd(path.Lambda[i])});
          }
          fz.push_back(path.Z.back());
          flam.push_back(path.Lambda.back());
          ft.push_back(path.t_grid.back());
        });
    csv.finalize();
    ctx.artifacts.push_back(o.out);

    json summary;
    summary["Z_final_quantiles"] = quantile_json(fz);
    summary["Lambda_final_quantiles"] = quantile_json(flam);
    summary["t_final_quantiles"] = quantile_json(ft);
    summary["paths"] = o.paths;
    io::write_file_atomic(ctx.out_path("summary.json"), summary.dump(2) + "\n");
    ctx.artifacts.push_back("summary.json");
    std::printf("sde z: %d paths written\n", o.paths);
    return true;
  }

  io::CsvWriter csv(ctx.out_path(o.out), {"replicate", "x", "L", "Ldot"});
  std::vector<double> r_hats, qv_errs, exponents;
  int absorbed = 0, exponent_skipped = 0;
  run_replicates<sde::LocalTimePath>(
      o.paths, ctx.workers,
      [&](int r) {
        const std::uint64_t s =
            rng::Stream::derive_seed(ctx.master_seed, static_cast<std::uint64_t>(r));
        if (o.mode == "main") {
          return sde::simulate_main_sde(o.t0, o.ydot0, o.xmax, o.dx, s,
                                        o.eps_stop);
        }
        return sde::reconstruct_local_time(
            sde::simulate_z(o.z0, o.lambda0, o.tmax, o.dt, s));
      },
      [&](int r, sde::LocalTimePath path) {
        const std::string rep = std::to_string(r);
        const std::size_t last = path.x_grid.size() - 1;
        for (std::size_t i = 0; i <= last; ++i) {
          if (i % stride == 0 || i == last) {
            csv.row({rep, fd(path.x_grid[i]), fd(path.L[i]), fd(path.Ldot[i])});
          }
        }
        r_hats.push_back(path.R_hat);
        if (std::isfinite(path.R_hat)) ++absorbed;

        // Realized quadratic variation against 16 * integral of L.
        const double qv = sde::realized_qv(path, path.x_grid.back());
        double integral = 0.0;
        for (std::size_t i = 0; i + 1 < path.L.size(); ++i) {
          integral += 0.5 * (path.L[i] + path.L[i + 1]) *
                      (path.x_grid[i + 1] - path.x_grid[i]);
        }
        if (integral > 0.0) {
          qv_errs.push_back(std::fabs(qv - 16.0 * integral) /
                            (16.0 * integral));
        }

        if (std::isfinite(path.R_hat)) {
          try {
            exponents.push_back(sde::extinction_exponent(path));
          } catch (const InsufficientDataError&) {
            ++exponent_skipped;
          }
        }
      });
  csv.finalize();
  ctx.artifacts.push_back(o.out);

  json summary;
  summary["R_hat_quantiles"] = quantile_json(r_hats);
  summary["absorbed_fraction"] =
      static_cast<double>(absorbed) / static_cast<double>(o.paths);
  double mean_err = 0.0;
  for (double e : qv_errs) mean_err += e;
  summary["qv_check"] = {
      {"mean_rel_error",
       qv_errs.empty() ? json() : json(mean_err / static_cast<double>(qv_errs.size()))},
      {"paths", qv_errs.size()}};
  summary["extinction_exponent_median"] =
      exponents.empty() ? json() : json(stats::empirical_quantile(exponents, 0.5));
  summary["extinction_exponent_count"] = exponents.size();
  summary["extinction_exponent_skipped"] = exponent_skipped;
  summary["paths"] = o.paths;
  io::write_file_atomic(ctx.out_path("summary.json"), summary.dump(2) + "\n");
  ctx.artifacts.push_back("summary.json");
  std::printf("sde %s: %d paths, %d absorbed\n", o.mode.c_str(), o.paths,
              absorbed);
  return true;
}

// ---------------------------------------------------------------------------
// particles
// ---------------------------------------------------------------------------

struct ParticleOpts {
  double alpha = 1.0;
  int N = 1000;
  double dt = 1.25e-5;
  std::string window = "-3.2:3.2";
  double bandwidth = 0.0125;
  double horizon = 32.0;
  int replicates = 10;
  std::string out = "local_time.csv";
};

particle::ParticleConfig particle_config(const ParticleOpts& o) {
  const auto win = parse_colon_tuple(o.window, 2, "window");
  particle::ParticleConfig cfg;
  cfg.alpha = o.alpha;
  cfg.N = o.N;
  cfg.dt = o.dt;
  cfg.window_lo = win[0];
  cfg.window_hi = win[1];
  cfg.w = o.bandwidth;
  cfg.horizon = o.horizon;
  cfg.snapshot_times = {};
  return cfg;
}

// One replicate with the standard budget-overflow policy: up to three
// retries on fresh derived seeds, counted for the manifest.
particle::ParticleRun run_one_particle_replicate(
    const particle::ParticleConfig& cfg, std::uint64_t master, int r,
    std::atomic<long long>& retries) {
  std::uint64_t rep_seed =
      rng::Stream::derive_seed(master, static_cast<std::uint64_t>(r));
  for (int attempt = 0;; ++attempt) {
    try {
      return particle::simulate_particles(cfg, rep_seed);
    } catch (const ResourceError&) {
      if (attempt >= 3) throw;
      ++retries;
      rep_seed = rng::Stream::derive_seed(rep_seed, 0xEE);
    }
  }
}

bool run_particles(RunContext& ctx, const ParticleOpts& o) {
  if (o.replicates < 1) throw ConfigError("replicates must be >= 1");
  const particle::ParticleConfig cfg = particle_config(o);

  io::CsvWriter csv(ctx.out_path(o.out),
                    {"replicate", "a", "L_hat", "Ldot_hat"});
  io::CsvWriter ext(ctx.out_path("extinction_times.csv"),
                    {"replicate", "extinction_time"});
  std::atomic<long long> retries{0};
  int extinct = 0;

  run_replicates<particle::ParticleRun>(
      o.replicates, ctx.workers,
      [&](int r) {
        return run_one_particle_replicate(cfg, ctx.master_seed, r, retries);
      },
      [&](int r, particle::ParticleRun run) {
        const std::string rep = std::to_string(r);
        const auto& centers = run.record.band_centers;
        for (std::size_t i = 2; i + 2 < centers.size(); ++i) {
          const auto [l_hat, ldot_hat] =
              particle::local_time_samples(run.record, centers[i]);
          csv.row({rep, fd(centers[i]), fd(l_hat), fd(ldot_hat)});
        }
        ext.row({rep, fd(run.extinction_time)});
        if (std::isfinite(run.extinction_time)) ++extinct;
      });
  csv.finalize();
  ext.finalize();
  ctx.artifacts.push_back(o.out);
  ctx.artifacts.push_back("extinction_times.csv");
  ctx.run_info["resource_retries"] = retries.load();
  std::printf("particles: %d replicates, %d extinct within the horizon\n",
              o.replicates, extinct);
  return true;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareOpts {
  std::string kind = "transition";
  double alpha = 1.0;
  double a0 = 0.3;
  double delta = 0.3;
  int replicates = 2000;
  int N = 1000;
  double dt = 1.25e-5;
  std::string window = "-3.2:3.2";
  double bandwidth = 0.0125;
  double horizon = 32.0;
  double dx = 2e-4;
  double ks_threshold = 0.06;
  double drift_h = 0.05;
  double survival_threshold = 0.1;
};

bool run_compare(RunContext& ctx, const CompareOpts& o) {
  if (o.kind != "transition") {
    throw ConfigError("experiment kind must be 'transition'");
  }
  if (o.replicates < 1) throw ConfigError("replicates must be >= 1");
  ParticleOpts po;
  po.alpha = o.alpha;
  po.N = o.N;
  po.dt = o.dt;
  po.window = o.window;
  po.bandwidth = o.bandwidth;
  po.horizon = o.horizon;
  particle::TransitionConfig tc;
  tc.particles = particle_config(po);
  tc.dx = o.dx;
  tc.ks_threshold = o.ks_threshold;
  tc.drift_h = o.drift_h;
  tc.survival_threshold = o.survival_threshold;

  const stats::ComparisonReport report = particle::transition_comparison(
      o.a0, o.delta, o.replicates, tc, ctx.master_seed);

  std::string text = report.to_json();
  if (text.empty() || text.back() != '\n') text += '\n';
  io::write_file_atomic(ctx.out_path("comparison.json"), text);
  ctx.artifacts.push_back("comparison.json");
  ctx.run_info["n_conditioned"] = report.n_a;
  std::printf("compare: pass=%s ks=%s (threshold %s), %zu conditioned pairs\n",
              report.pass ? "true" : "false", fd(report.ks).c_str(),
              fd(report.ks_threshold).c_str(), report.n_a);
  return report.pass;
}

// ---------------------------------------------------------------------------
// bridge
// ---------------------------------------------------------------------------

struct BridgeOpts {
  double t = 1.0;
  double y = 0.0;
  double h_bin = 0.1;
  std::string functional = "trunc_sum";
  double eps = 1.0;
  double h = 0.5;
  long long n = 20000;
};

bool run_bridge(RunContext& ctx, const BridgeOpts& o) {
  stabledist::BridgeFunctional fn;
  double param = 0.0;
  if (o.functional == "trunc_sum") {
    fn = stabledist::BridgeFunctional::trunc_sum;
    param = o.eps;
  } else if (o.functional == "gamma_sum") {
    fn = stabledist::BridgeFunctional::gamma_sum;
    param = o.h;
  } else {
    throw ConfigError("functional must be trunc_sum or gamma_sum");
  }
  if (o.n < 1) throw ConfigError("n must be >= 1");

  rng::Stream stream(ctx.master_seed);
  const stabledist::BridgeResult res = stabledist::bridge_check(
      o.t, o.y, o.h_bin, fn, param, static_cast<std::size_t>(o.n), stream);
  const double target =
      fn == stabledist::BridgeFunctional::trunc_sum
          ? stabledist::truncated_jump_sum_conditional(o.t, o.y, o.eps)
          : 2.0 * o.y + drift::g_h(o.t, o.y, o.h);
  const bool hit = res.ci_lo <= target && target <= res.ci_hi;

  json j;
  j["functional"] = o.functional;
  j["t"] = o.t;
  j["y"] = o.y;
  j["h_bin"] = o.h_bin;
  j[o.functional == "trunc_sum" ? "eps" : "h"] = param;
  j["n"] = res.n;
  j["effective_sample_size"] = res.ess;
  j["estimate"] = res.estimate;
  j["ci_lo"] = res.ci_lo;
  j["ci_hi"] = res.ci_hi;
  j["target"] = target;
  j["hit"] = hit;
  io::write_file_atomic(ctx.out_path("bridge.json"), j.dump(2) + "\n");
  ctx.artifacts.push_back("bridge.json");
  std::printf("bridge %s: estimate=%s CI=[%s, %s] target=%s hit=%s\n",
              o.functional.c_str(), fd(res.estimate).c_str(),
              fd(res.ci_lo).c_str(), fd(res.ci_hi).c_str(), fd(target).c_str(),
              hit ? "true" : "false");
  return hit;
}

// ---------------------------------------------------------------------------
// Wiring
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "sbmlab_out";
};

struct SubCommand {
  std::string name;
  CLI::App* app = nullptr;
  std::unique_ptr<OptionSet> opts;
  CommonOpts common;
  std::function<bool(RunContext&)> runner;
};

void bind_common(OptionSet& os, CommonOpts& c) {
  os.bind("seed", &c.seed, "master seed; replicate r uses a derived stream");
  os.bind("workers", &c.workers,
          "worker threads for replicate loops (default: SBMLAB_WORKERS or 1)");
  os.bind("output_dir", &c.output_dir, "directory for all artifacts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for a local-time SDE: closed-form "
               "evaluators, two simulation routes, a branching-particle "
               "oracle, and statistical cross-checks"};
  app.require_subcommand(1);
  // Long-form help only: one experiment exposes an --h parameter, which
  // would collide with the default -h alias.
  app.set_help_flag("--help", "print help and exit");

  int env_workers = 1;
  try {
    env_workers = default_workers();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  std::vector<SubCommand> subs;
  subs.reserve(6);
  const auto add_sub = [&](const std::string& name, const std::string& desc) {
    SubCommand sc;
    sc.name = name;
    sc.app = app.add_subcommand(name, desc);
    sc.app->set_help_flag("--help", "print help and exit");
    sc.opts = std::make_unique<OptionSet>(sc.app);
    sc.common.workers = env_workers;
    subs.push_back(std::move(sc));
    bind_common(*subs.back().opts, subs.back().common);
    return subs.size() - 1;
  };

  // selfcheck
  {
    const auto i = add_sub("selfcheck",
                           "run the closed-form identity suite and report "
                           "every computed/expected pair");
    subs[i].runner = [](RunContext& ctx) { return run_selfcheck(ctx); };
  }

  // density
  static DensityOpts dopt;
  {
    const auto i = add_sub("density",
                           "tabulate the stable density, its ratio, and the "
                           "drift/invariant-law fields over a grid");
    subs[i].opts->bind("grid", &dopt.grid, "evaluation grid lo:hi:step");
    subs[i].opts->bind("fourier_check", &dopt.fourier_check,
                       "1 adds an independent Fourier-route column");
    subs[i].opts->bind("fourier_rel_tol", &dopt.fourier_rel_tol,
                       "relative tolerance for the Fourier route");
    subs[i].runner = [](RunContext& ctx) { return run_density(ctx, dopt); };
  }

  // sde
  static SdeOpts sopt;
  {
    const auto i = add_sub("sde",
                           "simulate the local-time SDE (main), the reduced "
                           "diffusion (z), or the reduced route mapped back "
                           "(reconstruct)");
    auto& os = *subs[i].opts;
    os.bind("mode", &sopt.mode, "main | z | reconstruct");
    os.bind("t0", &sopt.t0, "initial level L(0) (main mode)");
    os.bind("ydot0", &sopt.ydot0, "initial slope Ldot(0) (main mode)");
    os.bind("z0", &sopt.z0, "initial reduced state (z/reconstruct modes)");
    os.bind("lambda0", &sopt.lambda0, "initial companion value (z/reconstruct)");
    os.bind("dx", &sopt.dx, "spatial step (main mode)");
    os.bind("dt", &sopt.dt, "time step (z/reconstruct modes)");
    os.bind("xmax", &sopt.xmax, "spatial horizon (main mode)");
    os.bind("tmax", &sopt.tmax, "time horizon cap (z/reconstruct modes)");
    os.bind("eps_stop", &sopt.eps_stop, "absorption level for L (main mode)");
    os.bind("paths", &sopt.paths, "number of replicate paths");
    os.bind("csv_stride", &sopt.csv_stride,
            "write every k-th grid node to the CSV (first/last always)");
    os.bind("out", &sopt.out, "paths CSV filename inside output_dir");
    subs[i].runner = [](RunContext& ctx) { return run_sde(ctx, sopt); };
  }

  // particles
  static ParticleOpts popt;
  {
    const auto i = add_sub("particles",
                           "branching-particle oracle: band-occupancy local "
                           "time estimates and extinction times");
    auto& os = *subs[i].opts;
    os.bind("alpha", &popt.alpha, "initial total mass at the origin");
    os.bind("N", &popt.N, "initial particle count (>= 1000)");
    os.bind("dt", &popt.dt, "particle time step");
    os.bind("window", &popt.window, "spatial window lo:hi");
    os.bind("bandwidth", &popt.bandwidth, "occupancy band width");
    os.bind("horizon", &popt.horizon, "simulation horizon");
    os.bind("replicates", &popt.replicates, "number of replicates");
    os.bind("out", &popt.out, "estimates CSV filename inside output_dir");
    subs[i].runner = [](RunContext& ctx) { return run_particles(ctx, popt); };
  }

  // compare
  static CompareOpts copt;
  {
    const auto i = add_sub("compare",
                           "statistical comparison of the particle oracle "
                           "against the SDE transition law");
    auto& os = *subs[i].opts;
    os.bind("experiment", &copt.kind, "comparison kind (transition)");
    os.bind("alpha", &copt.alpha, "initial total mass at the origin");
    os.bind("a0", &copt.a0, "conditioning abscissa");
    os.bind("delta", &copt.delta, "displacement (0 for the identity check)");
    os.bind("replicates", &copt.replicates, "particle replicates");
    os.bind("N", &copt.N, "initial particle count");
    os.bind("dt", &copt.dt, "particle time step");
    os.bind("window", &copt.window, "particle spatial window lo:hi");
    os.bind("bandwidth", &copt.bandwidth, "occupancy band width");
    os.bind("horizon", &copt.horizon, "particle horizon");
    os.bind("dx", &copt.dx, "SDE spatial step");
    os.bind("ks_threshold", &copt.ks_threshold, "marginal KS acceptance bound");
    os.bind("drift_h", &copt.drift_h,
            "offset for the conditional-drift estimate (>= 2 bandwidths)");
    os.bind("survival_threshold", &copt.survival_threshold,
            "conditioning level for L at a0");
    subs[i].runner = [](RunContext& ctx) { return run_compare(ctx, copt); };
  }

  // bridge
  static BridgeOpts bopt;
  {
    const auto i = add_sub("bridge",
                           "kernel-conditioned Monte Carlo for conditional "
                           "jump functionals against their closed forms");
    auto& os = *subs[i].opts;
    os.bind("t", &bopt.t, "terminal time of the conditioning");
    os.bind("y", &bopt.y, "conditioning terminal value");
    os.bind("h_bin", &bopt.h_bin, "kernel half-width around y");
    os.bind("functional", &bopt.functional, "trunc_sum | gamma_sum");
    os.bind("eps", &bopt.eps, "jump truncation level (trunc_sum)");
    os.bind("h", &bopt.h, "kernel scale of the gamma functional (gamma_sum)");
    os.bind("n", &bopt.n, "simulated paths");
    subs[i].runner = [](RunContext& ctx) { return run_bridge(ctx, bopt); };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  SubCommand* chosen = nullptr;
  for (auto& sc : subs) {
    if (sc.app->parsed()) {
      chosen = &sc;
      break;
    }
  }
  if (!chosen) {
    std::fprintf(stderr, "config error: no experiment selected\n");
    return 2;
  }

  RunContext ctx;
  ctx.experiment = chosen->name;
  try {
    ctx.params = chosen->opts->resolve(chosen->name);
    ctx.master_seed = chosen->common.seed;
    ctx.workers = chosen->common.workers;
    ctx.output_dir = chosen->common.output_dir;
    if (ctx.workers < 1) throw ConfigError("workers must be >= 1");
    if (ctx.output_dir.empty()) throw ConfigError("output_dir must be nonempty");

    const bool pass = chosen->runner(ctx);
    write_manifest(ctx, pass ? "ok" : "fail", "");
    return pass ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    try {
      json er;
      er["message"] = e.what();
      io::write_file_atomic(ctx.out_path("error_report.json"),
                            er.dump(2) + "\n");
      ctx.artifacts.push_back("error_report.json");
      write_manifest(ctx, "error", e.what());
    } catch (...) {
      // Reporting is best effort; the exit code already carries the failure.
    }
    return 1;
  }
}
