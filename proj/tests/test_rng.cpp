#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sbmlab/rng.hpp"

using sbmlab::rng::Stream;

namespace {

// Marsaglia polar method, used as an independent route for cross-checks.
double polar_normal(Stream& s, double& cache, bool& has_cache) {
  if (has_cache) {
    has_cache = false;
    return cache;
  }
  double u, v, r2;
  do {
    u = 2.0 * s.u01() - 1.0;
    v = 2.0 * s.u01() - 1.0;
    r2 = u * u + v * v;
  } while (r2 >= 1.0 || r2 == 0.0);
  const double m = std::sqrt(-2.0 * std::log(r2) / r2);
  cache = v * m;
  has_cache = true;
  return u * m;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = double(i) / a.size();
    const double fb = double(j) / b.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("determinism and stream derivation") {
  Stream a(12345), b(12345), c(54321);
  for (int i = 0; i < 64; ++i) {
    CHECK(a.next() == b.next());
  }
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    if (a.next() != c.next()) differs = true;
  }
  CHECK(differs);

  Stream d0 = Stream::derive(99, 0);
  Stream d0b = Stream::derive(99, 0);
  Stream d1 = Stream::derive(99, 1);
  CHECK(d0.next() == d0b.next());
  CHECK(d0.next() != d1.next());

  // Derived streams are essentially uncorrelated.
  Stream x = Stream::derive(7, 3), y = Stream::derive(7, 4);
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = x.u01(), v = y.u01();
    sx += u;
    sy += v;
    sxx += u * u;
    syy += v * v;
    sxy += u * v;
  }
  const double corr = (sxy / n - (sx / n) * (sy / n)) /
                      std::sqrt((sxx / n - (sx / n) * (sx / n)) *
                                (syy / n - (sy / n) * (sy / n)));
  CHECK(std::fabs(corr) < 0.03);
}

TEST_CASE("uniform ranges") {
  Stream s(2024);
  double mn = 1.0, mx = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double u = s.u01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mn = std::min(mn, u);
    mx = std::max(mx, u);
  }
  CHECK(mn < 1e-4);
  CHECK(mx > 1.0 - 1e-4);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.upos();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("normal sampler moments and tails") {
  Stream s(777);
  const int n = 2000000;
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  int far_tail = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
    m3 += z * z * z;
    m4 += z * z * z * z;
    if (std::fabs(z) > 3.6541528853610088) ++far_tail;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  CHECK(std::fabs(m1) < 3e-3);
  CHECK(std::fabs(m2 - 1.0) < 5e-3);
  CHECK(std::fabs(m3) < 2e-2);
  CHECK(std::fabs(m4 - 3.0) < 5e-2);
  // P(|Z| > 3.65415...) = 2.5885e-4: expect ~518 hits.
  CHECK(far_tail > 380);
  CHECK(far_tail < 680);
}

TEST_CASE("normal sampler distribution shape") {
  Stream s(31337);
  const int n = 100000;
  std::vector<double> z(n);
  for (auto& v : z) v = s.normal();
  std::sort(z.begin(), z.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = std_normal_cdf(z[i]);
    d = std::max(d, std::fabs(f - double(i + 1) / n));
    d = std::max(d, std::fabs(f - double(i) / n));
  }
  CHECK(d < 0.006);  // KS critical value at alpha ~ 1e-3 for n = 1e5

  // Cross-check against the polar method on an independent stream.
  Stream sp(90210);
  double cache = 0.0;
  bool has = false;
  std::vector<double> w(n);
  for (auto& v : w) v = polar_normal(sp, cache, has);
  CHECK(two_sample_ks(z, w) < 0.009);
}

TEST_CASE("exponential sampler") {
  Stream s(4242);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = s.exponential();
    CHECK(e > 0.0);
    sum += e;
    sum2 += e * e;
  }
  CHECK(std::fabs(sum / n - 1.0) < 5e-3);
  CHECK(std::fabs(sum2 / n - 2.0) < 2e-2);
}

TEST_CASE("poisson sampler moments in both regimes") {
  Stream s(555);
  for (double mean : {0.02, 3.0, 50.0, 400.0}) {
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = double(s.poisson(mean));
      sum += k;
      sum2 += k * k;
    }
    const double m = sum / n;
    const double var = sum2 / n - m * m;
    const double se_mean = std::sqrt(mean / n);
    CHECK(std::fabs(m - mean) < 6.0 * se_mean);
    CHECK(std::fabs(var / mean - 1.0) < 0.05);
  }
  CHECK(s.poisson(0.0) == 0);
}

TEST_CASE("binomial sampler") {
  Stream s(808);
  CHECK(s.binomial(0, 0.5) == 0);
  CHECK(s.binomial(25, 0.0) == 0);
  CHECK(s.binomial(25, 1.0) == 25);

  const int n = 200000;
  {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto k = s.binomial(100, 0.3);
      CHECK(k <= 100);
      sum += double(k);
      sum2 += double(k) * double(k);
    }
    const double m = sum / n;
    const double var = sum2 / n - m * m;
    CHECK(std::fabs(m - 30.0) < 0.07);
    CHECK(std::fabs(var - 21.0) < 0.5);
  }
  {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += double(s.binomial(10, 0.9));
    CHECK(std::fabs(sum / n - 9.0) < 0.02);
  }
}
