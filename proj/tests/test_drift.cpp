#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sbmlab/drift.hpp"
#include "sbmlab/quadrature.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/specfun.hpp"
#include "sbmlab/stabledist.hpp"

using namespace sbmlab;

namespace {

void check_rel(double got, double want, double rel_tol) {
  CHECK(std::fabs(got - want) <=
        rel_tol * std::max(std::fabs(want), 1e-300));
}

}  // namespace

TEST_CASE("limiting drift g") {
  // t = 0 is the boundary value of the field: identically zero.
  CHECK(drift::g(0.0, -5.0) == 0.0);
  CHECK(drift::g(0.0, 0.0) == 0.0);
  CHECK(drift::g(0.0, 3.0) == 0.0);
  CHECK_THROWS_AS(drift::g(-1.0, 0.0), DomainError);
  CHECK_THROWS_AS(drift::g(-1e-12, 1.0), DomainError);

  check_rel(drift::g(1.0, 0.0), -6.0390979866030894, 1e-13);
  check_rel(drift::g(1.0, 1.0), -7.9957183044217552, 1e-13);
  check_rel(drift::g(1.0, -1.0), 2.25663833204085, 1e-12);
  check_rel(drift::g(2.0, -1.0), -2.2075533856255638, 1e-13);

  // Far to the right of the bulk, y * g(t, y) / t approaches -20.
  for (double t : {0.5, 2.0}) {
    const double y = 40.0 * std::pow(t, 2.0 / 3.0);
    const double v = y * drift::g(t, y) / t;
    CHECK(std::fabs(v + 20.0) <= 0.4);
  }

  // Parabolic scaling: g(l t, l^{2/3} y) = l^{1/3} g(t, y).
  rng::Stream rs(20240825u);
  for (int i = 0; i < 20; ++i) {
    const double t = 10.0 * rs.upos();
    const double y = 40.0 * (rs.u01() - 0.5);
    for (double l : {0.5, 2.0}) {
      const double lhs = drift::g(l * t, std::pow(l, 2.0 / 3.0) * y);
      const double rhs = std::cbrt(l) * drift::g(t, y);
      check_rel(lhs, rhs, 1e-10);
    }
  }

  // Pure function: bitwise repeatable.
  CHECK(drift::g(1.3, -0.7) == drift::g(1.3, -0.7));
}

TEST_CASE("negative part of g is uniformly bounded") {
  const auto& rb = drift::certified_ratio_bound();
  check_rel(rb.sup, 0.99946779611621017, 1e-10);
  CHECK(std::fabs(rb.at - 0.995787654776) <= 1e-5);
  CHECK(std::fabs(rb.from - (-0.805399630584312872)) <= 1e-9);
  CHECK(rb.sup < 1.0);  // strict: the ratio never reaches 1 on the scan

  // Wherever g is negative, |g| <= 8 sup|r| t^{1/3}.
  rng::Stream rs(777002u);
  const double cap = 8.0 * rb.sup * (1.0 + 1e-12);
  for (int i = 0; i < 10000; ++i) {
    const double t = 10.0 * rs.upos();
    const double y = 100.0 * (rs.u01() - 0.5);
    const double v = drift::g(t, y);
    if (v < 0.0) CHECK(-v <= cap * std::cbrt(t));
  }
}

TEST_CASE("pre-limit drift g_h anchors and limit") {
  CHECK_THROWS_AS(drift::g_h(0.0, 0.0, 0.1), DomainError);
  CHECK_THROWS_AS(drift::g_h(-1.0, 0.0, 0.1), DomainError);
  CHECK_THROWS_AS(drift::g_h(1.0, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(drift::g_h(1.0, 0.0, -0.5), DomainError);

  check_rel(drift::g_h(1.0, 0.0, 0.5), -0.77762354650487713, 1e-11);
  check_rel(drift::g_h(1.0, 1.0, 0.05), -0.39663629452205094, 1e-11);
  check_rel(drift::g_h(1.0, -1.0, 0.05), 0.13222559239825561, 1e-11);
  check_rel(drift::g_h(1.0, 1.0, 0.5), -2.5214433729238774, 1e-11);
  check_rel(drift::g_h(1.0, -1.0, 0.5), 1.3136683006696138, 1e-11);
  check_rel(drift::g_h(2.0, -0.5, 0.3), -0.57803202586565129, 1e-11);

  // g_h vanishes linearly in h with slope g: shrinking h by 10 shrinks the
  // defect of g_h / h against g by at least 5 (measured: 9.7, 86, 6.8).
  for (double y : {0.0, 1.0, -1.0}) {
    const double gv = drift::g(1.0, y);
    const double e_coarse = std::fabs(drift::g_h(1.0, y, 0.1) / 0.1 - gv);
    const double e_fine = std::fabs(drift::g_h(1.0, y, 0.01) / 0.01 - gv);
    CHECK(e_fine < e_coarse);
    CHECK(e_coarse / e_fine >= 5.0);
    CHECK(e_fine <= 0.05 * std::fabs(gv));
    // Sign agreement with the limit once h is small.
    CHECK(drift::g_h(1.0, y, 0.05) * gv >= 0.0);
  }

  CHECK(drift::g_h(1.0, 1.0, 0.05) == drift::g_h(1.0, 1.0, 0.05));
}

TEST_CASE("occupation kernel normalization") {
  // c1 Int_0^inf (2 - gamma(3 z / 2)) z^{-1/2} dz = 8: the constant that
  // makes the pre-limit drift's kernel consistent with the jump intensity.
  const double a = 1.5;
  const auto f = [&](double z) {
    return (2.0 - specfun::gamma_fn(a * z)) / std::sqrt(z);
  };
  double total = quad::finite_singular(f, 0.0, 0.1, 1e-10);
  const double cuts[] = {0.1, 1.0, 10.0, 100.0, 1e4};
  for (int i = 0; i + 1 < 5; ++i) {
    total += quad::finite(f, cuts[i], cuts[i + 1], 1e-10);
  }
  // Beyond Z the expansion 2 - gamma(u) = -sum_k G_k u^{-k} integrates term
  // by term; the coefficient sequence eventually diverges, so truncate at
  // the smallest term.
  const double Z = 1e4;
  const auto& G = specfun::gamma_tail_coefficients();
  double pw = 1.0 / (a * std::sqrt(Z));
  double tail = 0.0;
  double prev = std::numeric_limits<double>::max();
  for (std::size_t k = 1; k <= G.size(); ++k) {
    const double term = -G[k - 1] * pw / (double(k) - 0.5);
    if (std::fabs(term) >= prev) break;
    tail += term;
    prev = std::fabs(term);
    pw /= a * Z;
  }
  total += tail;
  CHECK(std::fabs(stabledist::constants().c1 * total - 8.0) <= 1e-4);
}

TEST_CASE("reduced drift b") {
  check_rel(drift::b(0.0), -6.0390979866030894, 1e-12);
  check_rel(drift::b(-8.0), 41.677656835471528, 1e-12);
  check_rel(drift::b(-3.0), 3.6510029658736691, 1e-12);
  check_rel(drift::b(-1.0), -3.5512368096883411, 1e-12);
  check_rel(drift::b(1.0), -8.255164809574996, 1e-12);
  check_rel(drift::b(3.0), -13.718573792879574, 1e-12);
  check_rel(drift::b(8.0), -47.323746470358634, 1e-12);

  // At z = 0 the quadratic part vanishes and b coincides with g(1, 0).
  CHECK(drift::b(0.0) == drift::g(1.0, 0.0));

  // Large |z|: the -2/3 z^2 part dominates, the ratio term stays O(1/z).
  CHECK(std::fabs(drift::b(60.0) + 2400.0) <= 1.0);
  CHECK(std::fabs(drift::b(-60.0) - 2400.0) <= 1.0);

  // The single root on the negative axis.
  const double z_star = -2.11329591441941563;
  CHECK(std::fabs(drift::b(z_star)) < 1e-12);
  CHECK(drift::b(z_star - 0.01) > 0.0);
  CHECK(drift::b(z_star + 0.01) < 0.0);

  // Consistency with the time-indexed field: b(z) + (2/3) z^2 equals
  // t^{-1/3} g(t, (z/2) t^{2/3}) for every t.
  for (double t : {0.7, 1.3}) {
    for (double z : {-8.0, -5.0, -2.0, -0.5, 0.0, 0.5, 2.0, 5.0, 8.0}) {
      const double lhs = drift::b(z) + (2.0 / 3.0) * z * z;
      const double rhs =
          drift::g(t, 0.5 * z * std::pow(t, 2.0 / 3.0)) / std::cbrt(t);
      check_rel(lhs, rhs, 5e-13);
    }
  }
}

TEST_CASE("invariant law: normalizer, density, moments") {
  const auto& law = drift::invariant_law();
  check_rel(law.normalizer, 1.39310417724898945, 1e-9);
  check_rel(1.0 / law.normalizer, 0.717821406561808076, 1e-9);

  REQUIRE(law.grid_z.size() == 4001);
  REQUIRE(law.grid_F.size() == 4001);
  REQUIRE(law.grid_f.size() == 4001);
  CHECK(law.grid_z.front() == doctest::Approx(-20.0).epsilon(1e-12));
  CHECK(law.grid_z.back() == doctest::Approx(9.2).epsilon(1e-12));
  CHECK(law.grid_F.front() == 0.0);
  CHECK(law.grid_F.back() == 1.0);
  bool z_inc = true, f_inc = true, f_nonneg = true;
  for (std::size_t i = 1; i < law.grid_z.size(); ++i) {
    z_inc = z_inc && (law.grid_z[i] > law.grid_z[i - 1]);
    f_inc = f_inc && (law.grid_F[i] > law.grid_F[i - 1]);
    f_nonneg = f_nonneg && (law.grid_f[i] >= 0.0);
  }
  CHECK(z_inc);
  CHECK(f_inc);
  CHECK(f_nonneg);
  // Stored density values agree with direct evaluation.
  for (std::size_t i : {0u, 1000u, 2000u, 3000u, 4000u}) {
    check_rel(law.grid_f[i], drift::invariant_density(law.grid_z[i]), 1e-10);
  }

  // Total mass and mean by independent piecewise quadrature.
  const double cuts[] = {-20, -12, -8, -4, 0, 4, 8, 9.2};
  double mass = 0.0, mean = 0.0;
  for (int i = 0; i + 1 < 8; ++i) {
    mass += quad::finite([](double z) { return drift::invariant_density(z); },
                         cuts[i], cuts[i + 1], 1e-11);
    mean +=
        quad::finite([](double z) { return z * drift::invariant_density(z); },
                     cuts[i], cuts[i + 1], 1e-11);
  }
  CHECK(std::fabs(mass - 1.0) <= 1e-6);
  check_rel(mean, -1.857472236331986, 1e-7);

  // The defining shape: log density minus its closed-form exponent is the
  // same constant everywhere.
  const double ref = std::log(drift::invariant_density(0.0)) -
                     2.0 * stabledist::p1_log(0.0);
  for (double z : {-3.0, 3.0}) {
    const double v = std::log(drift::invariant_density(z)) -
                     2.0 * stabledist::p1_log(0.5 * z) + z * z * z / 36.0;
    CHECK(std::fabs(v - ref) < 1e-8);
  }

  // Right tail: density ~ C (c1)^2 32 z^{-5} e^{-z^3/36} within 10% at z=20.
  const double c1 = stabledist::constants().c1;
  const double pred = law.normalizer * c1 * c1 * 32.0 * std::pow(20.0, -5.0) *
                      std::exp(-8000.0 / 36.0);
  check_rel(drift::invariant_density(20.0), pred, 0.10);

  // Left tail: log-density decays like -|z|^3 / 36.
  const double drop = std::log(drift::invariant_density(-16.0)) -
                      std::log(drift::invariant_density(-15.0));
  CHECK(std::fabs(drop + (16.0 * 16.0 * 16.0 - 15.0 * 15.0 * 15.0) / 36.0) <
        0.4);
}

TEST_CASE("invariant cdf and quantile") {
  CHECK(drift::invariant_cdf(-25.0) == 0.0);
  CHECK(drift::invariant_cdf(10.0) == 1.0);
  // Non-decreasing on a coarse sweep.
  double prev = -1.0;
  for (double z = -21.0; z <= 10.0; z += 0.05) {
    const double c = drift::invariant_cdf(z);
    CHECK(c >= prev);
    prev = c;
  }

  struct QA {
    double p, q;
  };
  const std::vector<QA> anchors = {{0.05, -4.18757165677},
                                   {0.25, -2.91033067389},
                                   {0.50, -1.93828690769},
                                   {0.75, -0.886902374643},
                                   {0.95, 0.752713222463}};
  for (const auto& a : anchors) {
    CHECK(std::fabs(drift::invariant_quantile(a.p) - a.q) <=
          1e-6 * std::max(1.0, std::fabs(a.q)));
    CHECK(std::fabs(drift::invariant_cdf(a.q) - a.p) <= 1e-6);
  }

  // The sixteen equal-probability representatives used by the two-route
  // distribution comparison.
  const double q16[16] = {
      -4.457601517187022, -3.771649401275603, -3.366799475979324,
      -3.050805148998848, -2.777451980275725, -2.527113256321482,
      -2.288861015608918, -2.055260528265937, -1.820228805257462,
      -1.577800885637248, -1.321030436373347, -1.040448785826331,
      -0.721042172359997, -0.3345584812794259, 0.1873443522296324,
      1.133489943315298};
  for (int i = 0; i < 16; ++i) {
    const double p = (2.0 * i + 1.0) / 32.0;
    CHECK(std::fabs(drift::invariant_quantile(p) - q16[i]) <=
          1e-6 * std::max(1.0, std::fabs(q16[i])));
  }

  // Round trip across the body of the law.
  double worst = 0.0;
  for (double p = 0.001; p <= 0.999; p += 0.0007) {
    const double d =
        std::fabs(drift::invariant_cdf(drift::invariant_quantile(p)) - p);
    worst = std::max(worst, d);
  }
  CHECK(worst <= 1e-6);

  CHECK(drift::invariant_quantile(0.2) < drift::invariant_quantile(0.4));
  CHECK(drift::invariant_quantile(0.4) < drift::invariant_quantile(0.6));

  CHECK_THROWS_AS(drift::invariant_quantile(0.0), DomainError);
  CHECK_THROWS_AS(drift::invariant_quantile(1.0), DomainError);
  CHECK_THROWS_AS(drift::invariant_quantile(-0.1), DomainError);
  CHECK_THROWS_AS(drift::invariant_quantile(1.5), DomainError);

  // Deterministic across calls.
  CHECK(drift::invariant_quantile(0.37) == drift::invariant_quantile(0.37));
}

TEST_CASE("scale function") {
  CHECK(drift::scale_function(0.0) == 0.0);
  check_rel(drift::scale_derivative(0.0), 1.0, 1e-14);

  check_rel(drift::scale_function(-5.0), -4.75207808664016, 1e-9);
  check_rel(drift::scale_function(-2.0), -1.19817755028083, 1e-9);
  check_rel(drift::scale_function(1.0), 1.57993620276031, 1e-9);
  check_rel(drift::scale_function(2.0), 6.1317563000908, 1e-9);
  check_rel(drift::scale_function(5.0), 1250.83034220502, 1e-9);

  double prev = drift::scale_function(-5.0);
  for (double x = -4.5; x <= 5.0; x += 0.5) {
    const double s = drift::scale_function(x);
    CHECK(s > prev);
    prev = s;
  }

  // s'(x) nu(x) is constant: the two exponents cancel exactly.
  const double p10 = std::exp(stabledist::p1_log(0.0));
  const double want = drift::invariant_law().normalizer * p10 * p10;
  for (double x : {-2.0, 0.0, 2.0, 4.0}) {
    check_rel(drift::scale_derivative(x) * drift::invariant_density(x), want,
              1e-12);
  }

  // Outside ~[-29.5, 29.25] the scale integral exceeds double range.
  try {
    drift::scale_function(35.0);
    CHECK(false);
  } catch (const RangeError& e) {
    CHECK(e.last_abscissa > 29.0);
    CHECK(e.last_abscissa < 29.5);
    CHECK(std::isfinite(e.last_value));
    CHECK(e.last_value > 1e300);
  }
  try {
    drift::scale_function(-35.0);
    CHECK(false);
  } catch (const RangeError& e) {
    CHECK(e.last_abscissa < -29.2);
    CHECK(e.last_abscissa > -29.7);
    CHECK(std::isfinite(e.last_value));
    CHECK(e.last_value < -1e300);
  }

  CHECK_THROWS_AS(
      drift::scale_function(std::numeric_limits<double>::infinity()),
      DomainError);
  CHECK_THROWS_AS(
      drift::scale_function(std::numeric_limits<double>::quiet_NaN()),
      DomainError);
}
