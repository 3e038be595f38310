#pragma once

// Deterministic splittable pseudo-random streams and scalar samplers.
//
// Replicate fan-out uses one xoshiro256++ generator per replicate, seeded from
// (master_seed, stream_index) through a splitmix64-style hash, so results are
// reproducible and independent of scheduling order.  Normal variates come
// from a 256-layer ziggurat over the standard Gaussian, with Marsaglia's
// exact tail method beyond the ziggurat edge.

#include <array>
#include <cmath>
#include <cstdint>

namespace sbmlab::rng {

// One step of the splitmix64 sequence (also usable as a 64-bit mixer).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

// Ziggurat tables for the standard normal, built once.
struct ZigguratTables {
  // x[0] = 0 < x[1] < ... < x[256] = R; f[i] = exp(-x[i]^2/2).
  std::array<double, 257> x{};
  std::array<double, 257> f{};
  static constexpr double kR = 3.6541528853610088;
  // One-sided slab area: R*f(R) + integral_R^inf exp(-t^2/2) dt.
  double v = 0.0;

  ZigguratTables() {
    const double fR = std::exp(-0.5 * kR * kR);
    const double tail = std::sqrt(M_PI / 2.0) * std::erfc(kR / std::sqrt(2.0));
    v = kR * fR + tail;
    x[256] = kR;
    f[256] = fR;
    for (int i = 255; i >= 1; --i) {
      x[i] = std::sqrt(-2.0 * std::log(v / x[i + 1] + f[i + 1]));
      f[i] = std::exp(-0.5 * x[i] * x[i]);
    }
    x[0] = 0.0;
    f[0] = 1.0;
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

// xoshiro256++ with splitmix64 seeding.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64_next(sm);
  }

  // Seed of the index-th independent substream of a master seed.  The index
  // is hashed to full avalanche before combining, so consecutive indices give
  // unrelated generator states.  Exposed separately so that callers who must
  // record a single u64 seed (path metadata, manifests) can reproduce the
  // derived stream from it.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t t = index;
    return master ^ splitmix64_next(t);
  }

  // Derive the index-th independent stream of a master seed.
  static Stream derive(std::uint64_t master, std::uint64_t index) {
    return Stream(derive_seed(master, index));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1p-53; }

  // Uniform on (0, 1] — safe as a log() argument.
  double upos() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1p-53;
  }

  // Standard normal via 256-layer ziggurat.
  double normal() {
    const auto& z = detail::ziggurat();
    for (;;) {
      const std::uint64_t bits = next();
      const unsigned layer = static_cast<unsigned>(bits & 255u);
      const double sign = (bits & 256u) ? -1.0 : 1.0;
      const double u = static_cast<double>(bits >> 9) * 0x1p-55;
      if (layer > 0) {
        const double xi = u * z.x[layer + 1];
        if (xi < z.x[layer]) return sign * xi;
        // Wedge between the rectangle and the density.
        const double fy =
            z.f[layer + 1] + u01() * (z.f[layer] - z.f[layer + 1]);
        if (fy < std::exp(-0.5 * xi * xi)) return sign * xi;
      } else {
        // Base layer: rectangle [0, R] x [0, f(R)] plus the exact tail.
        const double xi = u * (z.v / z.f[256]);
        if (xi < z.x[256]) return sign * xi;
        for (;;) {
          const double ex = -std::log(upos()) / z.x[256];
          const double ey = -std::log(upos());
          if (2.0 * ey > ex * ex) return sign * (z.x[256] + ex);
        }
      }
    }
  }

  // Exponential with unit mean.
  double exponential() { return -std::log(upos()); }

  // Poisson(mean).  Inversion-by-multiplication for small means, the PTRS
  // transformed-rejection method for large means.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
      const double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = u01();
      while (prod > limit) {
        ++k;
        prod *= u01();
      }
      return k;
    }
    // PTRS (Hormann): valid for mean >= 10.
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = u01() - 0.5;
      const double v = upos();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          k * loglam - mean - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  // Binomial(n, p) by geometric waiting-time skipping: O(n*p) expected work,
  // which is small for the per-step branching probabilities used here.
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (p <= 0.0 || n == 0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    const double log_q = std::log1p(-p);
    std::uint64_t count = 0;
    double skipped = 0.0;
    for (;;) {
      skipped += std::floor(std::log(upos()) / log_q) + 1.0;
      if (skipped > static_cast<double>(n)) return count;
      ++count;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace sbmlab::rng
