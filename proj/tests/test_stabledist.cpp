#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbmlab/quadrature.hpp"
#include "sbmlab/specfun.hpp"
#include "sbmlab/stabledist.hpp"
#include "sbmlab/stats.hpp"

using namespace sbmlab;
using namespace sbmlab::stabledist;

namespace {

void check_rel(double got, double want, double rel_tol) {
  CHECK(std::fabs(got - want) <=
        rel_tol * std::max(std::fabs(want), 1e-300));
}

double seam_jump(double (*f)(double, EvalBranch*), double sw) {
  const double below = f(sw * (1.0 - 1e-12) - (sw == 0 ? 1e-12 : 0), nullptr);
  const double above = f(sw * (1.0 + 1e-12) + (sw == 0 ? 1e-12 : 0), nullptr);
  return std::fabs(above - below) / std::max(std::fabs(below), 1e-300);
}

// Fourier value, or the best achieved estimate when certification fails.
double fourier_or_estimate(double y, double rel_tol) {
  try {
    return p1_fourier(y, rel_tol);
  } catch (const ConvergenceError& e) {
    return e.achieved_estimate;
  }
}

}  // namespace

TEST_CASE("constants") {
  const auto& c = constants();
  CHECK(c.c0 == doctest::Approx(0.5773502691896258).epsilon(1e-15));
  CHECK(c.c1 == doctest::Approx(0.34549414947133548).epsilon(1e-15));
  CHECK(c.alpha_index == 1.5);
  CHECK(c.psi_coeff == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  const auto& m = default_model();
  CHECK(m.ratio_tail_thresholds.first == -15.0);
  CHECK(m.ratio_tail_thresholds.second == 15.0);
}

TEST_CASE("p1 matches high-precision anchors") {
  struct Anchor {
    double y, v, tol;
  };
  const std::vector<Anchor> anchors = {
      {0.0, 0.2848676139753766863, 2e-13},
      {1.0, 0.1129849469816915284, 2e-12},
      {-3.0, 0.00198629499689967983, 2e-12},
      {15.0, 3.959594361976552508e-4, 2e-9},
      {20.0, 0.000193031596960827178163, 1e-11},
      {22.0, 0.000152126778153049321219, 1e-11},
      {25.0, 0.000110527189246790369, 1e-12},
      {30.0, 7.007566156579838395e-5, 1e-12},
      {40.0, 0.000034139804846618346, 1e-13},
      {50.0, 1.95434164815039790929e-5, 1e-13},
      {-12.5, 5.19988000711541980326e-189, 1e-11},
      {-13.0, 1.54226406972513662979e-212, 1e-11},
      {-14.0, 2.59023485740820891842e-265, 1e-11}};
  for (const auto& a : anchors) check_rel(p1(a.y), a.v, a.tol);

  // Positivity everywhere, including deep left underflow territory.
  for (double y : {-300.0, -20.0, -14.9, -5.0, 0.0, 7.0, 1000.0}) {
    CHECK(p1(y) > 0.0);
  }

  // Branch bookkeeping and seam continuity.
  EvalBranch br{};
  p1(0.0, &br);
  CHECK(br.kind == BranchKind::series);
  p1(16.0, &br);
  CHECK(br.kind == BranchKind::asymptotic);
  CHECK(br.switch_point == 15.0);
  p1(-13.0, &br);
  CHECK(br.kind == BranchKind::asymptotic);
  CHECK(br.switch_point == 12.0);
  CHECK(seam_jump(&p1, 15.0) < 1e-9);
  // At -12 the log-slope is ratio_r(-12) ~ 96, so even the +-1.2e-11 test
  // window moves the true density by ~2e-9; compare branches through a
  // first-order Taylor correction instead of a raw jump.
  {
    const double a = -12.0 * (1.0 + 1e-12);  // series side
    const double b = -12.0 * (1.0 - 1e-12);  // body side
    const double predicted = ratio_r(-12.0) * (b - a);
    CHECK(std::fabs((p1_log(b) - p1_log(a)) - predicted) < 1e-9);
  }
}

TEST_CASE("p1_log agrees with p1 and covers the underflow range") {
  check_rel(p1_log(-50.0), -27776.5968627720604862, 1e-14);
  check_rel(p1_log(50.0), -10.8428720811111244632, 1e-13);
  for (double y : {-14.0, -9.0, -5.0, -1.0, 0.0, 2.0, 14.0, 20.0}) {
    CHECK(std::fabs(p1_log(y) - std::log(p1(y))) < 1e-11);
  }
  // Left-tail log density is finite far beyond double underflow.
  CHECK(std::isfinite(p1_log(-200.0)));
  CHECK(p1_log(-200.0) < -1e6);
}

TEST_CASE("ratio_r matches anchors and its tail expansions") {
  struct Anchor {
    double w, v, tol;
  };
  const std::vector<Anchor> anchors = {
      {0.0, -0.7548872483253861723, 1e-12},
      {1.0, -0.9994647880527194035, 1e-12},
      {-3.0, 5.837366633250892298, 1e-12},
      {14.0, -0.178231443118845858134, 2e-10},
      {15.0, -0.166408438508550720974, 2e-9},
      {-14.0, 130.630962126553205521, 1e-12},
      {-15.0, 149.966674064223400146, 1e-12},
      {25.0, -0.0999664289943041111829, 1e-12},
      {30.0, -0.08331713772564794447, 1e-12},
      {40.0, -0.0624948741280129954415, 1e-13},
      {60.0, -0.0416656539984752014382, 1e-14},
      {-30.0, 599.983333796219161153, 1e-14},
      {-40.0, 1066.65416681314074341, 1e-14}};
  for (const auto& a : anchors) check_rel(ratio_r(a.w), a.v, a.tol);

  // r(0) = 6^{-1/3} Ai(0)/Ai'(0), an exact algebraic identity of the map.
  const double c6 = 1.0 / std::cbrt(6.0);
  check_rel(ratio_r(0.0), c6 * specfun::airy_ai(0.0) / specfun::airy_aip(0.0),
            1e-14);

  CHECK(seam_jump(&ratio_r, 15.0) < 1e-9);
  CHECK(seam_jump(&ratio_r, -15.0) < 1e-9);

  // Published tail behavior: y r(y) -> -5/2, r(y) - (2/3)y^2 -> 1/(2y).
  CHECK(std::fabs(30.0 * ratio_r(30.0) + 2.5) < 0.03);
  CHECK(std::fabs((ratio_r(-30.0) - (2.0 / 3.0) * 900.0) / (1.0 / -60.0) -
                  1.0) < 0.1);
}

TEST_CASE("p1_prime consistent with finite differences and unimodality") {
  for (double y : {-3.0, -1.0, 0.0, 1.0, 3.0, 10.0}) {
    const double h = 1e-5;
    const double fd = (p1(y + h) - p1(y - h)) / (2 * h);
    CHECK(std::fabs(fd - p1_prime(y)) < 1e-7);
  }
  // Exactly one sign change of p1' on [-20, 20].
  int changes = 0;
  double prev = p1_prime(-20.0);
  for (double y = -19.99; y <= 20.0 + 1e-9; y += 0.01) {
    const double cur = p1_prime(y);
    if ((prev < 0) != (cur < 0)) ++changes;
    prev = cur;
  }
  CHECK(changes == 1);
  // Mode location and height.
  check_rel(p1(-0.805399630584312872), 0.402577470051973109, 1e-11);
  CHECK(std::fabs(p1_prime(-0.805399630584312872)) < 1e-9);
}

TEST_CASE("scaling relation is exact by construction") {
  for (double t : {0.1, 1.0, 10.0}) {
    for (double x : {-3.0, -0.5, 0.0, 1.0, 8.0}) {
      const double ti = std::pow(t, -2.0 / 3.0);
      CHECK(pt_density(t, x) == ti * p1(x * ti));
      CHECK(pt_prime(t, x) == ti * ti * p1_prime(x * ti));
    }
  }
}

TEST_CASE("normalization and mean by quadrature with analytic tails") {
  // Body [-14.6, 15] + series tail integrals beyond 15; left tail < 1e-300.
  const std::vector<double> cuts = {-14.6, -8.0, -3.0, 0.0, 3.0, 8.0, 15.0};
  double mass = 0.0, mean = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    mass += quad::finite([](double y) { return p1(y); }, cuts[i], cuts[i + 1],
                         1e-12);
    mean += quad::finite([](double y) { return y * p1(y); }, cuts[i],
                         cuts[i + 1], 1e-12);
  }
  const double c1 = constants().c1;
  const double c3 = -4.375 * c1;
  const double c5 = 13.50936107178233, c7 = -181.8015061630432;
  const double s15 = std::sqrt(15.0), p3 = std::pow(15.0, 3);
  mass += c1 * (2.0 / 3.0) / (15.0 * s15) + c3 * (2.0 / 9.0) / (p3 * 15.0 * s15) +
          c5 * (2.0 / 15.0) / (p3 * p3 * 15.0 * s15) +
          c7 * (2.0 / 21.0) / (p3 * p3 * p3 * 15.0 * s15);
  mean += c1 * 2.0 / s15 + c3 * (2.0 / 7.0) / (p3 * s15) +
          c5 * (2.0 / 13.0) / (p3 * p3 * s15) +
          c7 * (2.0 / 19.0) / (p3 * p3 * p3 * s15);
  CHECK(std::fabs(mass - 1.0) < 1e-6);
  CHECK(std::fabs(mean) < 1e-5);
}

TEST_CASE("fourier route agrees with the airy route") {
  check_rel(p1_fourier(0.0, 1e-10), 0.2848676139753766863, 1e-11);

  // Dual-route equivalence on the acceptance grid, catching certification
  // failures in the deep-cancellation region and using the estimate.
  double max_abs = 0.0;
  for (double y = -8.0; y <= 8.0 + 1e-9; y += 0.1) {
    const double f = fourier_or_estimate(y, 1e-8);
    max_abs = std::max(max_abs, std::fabs(f - p1(y)));
  }
  CHECK(max_abs <= 1e-6);

  // Certified (no-throw) relative agreement where the density is not tiny.
  for (double y : {-3.0, -1.0, 0.0, 0.5, 2.0, 5.0, 8.0}) {
    check_rel(p1_fourier(y, 1e-8), p1(y), 1e-7);
  }

  // p1_prime vs 5-point finite differences of the Fourier route.
  for (double y : {-2.0, 0.0, 1.0, 4.0}) {
    const double h = 0.05;
    const double fd = (-fourier_or_estimate(y + 2 * h, 1e-9) +
                       8 * fourier_or_estimate(y + h, 1e-9) -
                       8 * fourier_or_estimate(y - h, 1e-9) +
                       fourier_or_estimate(y - 2 * h, 1e-9)) /
                      (12 * h);
    CHECK(std::fabs(fd - p1_prime(y)) < 1e-5);
  }

  // Oscillatory segment route for |y| > 10.
  check_rel(p1_fourier(15.0, 1e-6), p1(15.0), 1e-5);
  const double right_50 = p1_fourier(50.0, 1e-6);
  CHECK(right_50 > 0.0);
  check_rel(right_50, p1(50.0), 1e-5);

  // Deep left tail: certification fails; the reported error bound still
  // places the (positive, astronomically small) true value inside it, and
  // the right tail dwarfs that bound.
  try {
    p1_fourier(-50.0, 1e-6);
    CHECK(false);
  } catch (const ConvergenceError& e) {
    CHECK(std::fabs(e.achieved_estimate) <= e.achieved_error);
    CHECK(right_50 > 10.0 * e.achieved_error);
  }

  CHECK_THROWS_AS(p1_fourier(0.0, 1e-13), DomainError);
  CHECK_THROWS_AS(p1_fourier(0.0, 1e-2), DomainError);
}

TEST_CASE("numeric cdf and quantile") {
  struct Anchor {
    double y, F;
  };
  const std::vector<Anchor> anchors = {
      {-4.0, 5.577074471240383e-8}, {-2.0, 0.03459822136711792},
      {-1.0, 0.300601262700131},    {-0.5, 0.498837421798124},
      {0.0, 2.0 / 3.0},             {0.5, 0.7832039238811769},
      {1.0, 0.856325725391309},     {2.0, 0.9283455906675577},
      {3.0, 0.9577070252855473},    {5.0, 0.979629462067545},
      {8.0, 0.9898494764292461},    {15.0, 0.9960369901783266}};
  for (const auto& a : anchors) {
    CHECK(std::fabs(cdf(a.y) - a.F) < 5e-7);
  }
  // Monotone, and the tails behave.
  double prev = -1.0;
  for (double y = -15.0; y <= 40.0; y += 0.25) {
    const double f = cdf(y);
    CHECK(f >= prev);
    prev = f;
  }
  CHECK(cdf(-20.0) == 0.0);
  CHECK(cdf(1e6) < 1.0);
  CHECK(cdf(1e6) > 1.0 - 1e-7);

  for (double p : {0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.997, 0.999}) {
    CHECK(std::fabs(cdf(quantile(p)) - p) < 1e-9);
  }
  CHECK_THROWS_AS(quantile(0.0), DomainError);
  CHECK_THROWS_AS(quantile(1.0), DomainError);
}

TEST_CASE("increment sampling matches the density") {
  rng::Stream s(20240817);
  const int n = 100000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_increment(1.0, s);

  // One-sample KS against the numeric CDF.
  CHECK(stats::ks_vs_cdf(draws, [](double y) { return cdf(y); }) <= 0.006);

  // P(U_1 <= 0) = 2/3.
  std::size_t neg = 0;
  for (double d : draws) {
    if (d <= 0.0) ++neg;
  }
  const double se = std::sqrt((2.0 / 3.0) * (1.0 / 3.0) / n);
  CHECK(std::fabs(double(neg) / n - 2.0 / 3.0) < 4.0 * se);

  // Strict stability: U_8 / 8^{2/3} has the law of U_1.
  std::vector<double> scaled(n);
  const double k = std::pow(8.0, -2.0 / 3.0);
  for (auto& d : scaled) d = k * sample_increment(8.0, s);
  CHECK(stats::ks_two_sample(draws, scaled) <= 0.01);

  // Truncated mean on [-20, 20] against the quadrature oracle.
  const double target = truncated_mean(-20.0, 20.0);
  double acc = 0.0, acc2 = 0.0;
  std::size_t m = 0;
  rng::Stream s2(99);
  for (int i = 0; i < 1000000; ++i) {
    const double d = sample_increment(1.0, s2);
    if (d >= -20.0 && d <= 20.0) {
      acc += d;
      acc2 += d * d;
      ++m;
    }
  }
  const double mc = acc / 1000000.0;
  const double sd = std::sqrt(acc2 / 1000000.0 - mc * mc);
  CHECK(std::fabs(mc - target) < 4.0 * sd / 1000.0);

  // Right tail ~ (2/3) c1 z^{-3/2}; left tail super-exponentially small.
  const double c1 = constants().c1;
  for (double z : {20.0, 40.0}) {
    std::size_t count = 0;
    for (double d : draws) {
      if (d > z) ++count;
    }
    const double expect = n * (2.0 / 3.0) * c1 / (z * std::sqrt(z));
    CHECK(std::fabs(double(count) / expect - 1.0) < 0.15 + 3.0 / std::sqrt(expect));
  }
  std::size_t deep_left = 0;
  for (double d : draws) {
    if (d < -5.0) ++deep_left;
  }
  CHECK(deep_left <= 1);  // P(U_1 < -5) ~ 4e-11
}

TEST_CASE("tail laws of the density itself") {
  // Right: p1(y) y^{5/2} nearly constant (= c1 eventually).
  const double v20 = p1(20.0) * std::pow(20.0, 2.5);
  const double v40 = p1(40.0) * std::pow(40.0, 2.5);
  CHECK(std::fabs(v20 / v40 - 1.0) < 0.15);
  CHECK(std::fabs(v40 / constants().c1 - 1.0) < 0.01);
  // Left: log p1(-y) + (2/9) y^3 grows sublinearly (like log of sqrt(y)).
  auto rem = [](double yy) { return p1_log(-yy) + 2.0 * yy * yy * yy / 9.0; };
  const double g1 = rem(12.0) - rem(10.0);
  const double g2 = rem(14.0) - rem(12.0);
  CHECK(g1 > 0.0);
  CHECK(g2 > 0.0);
  CHECK(g2 < g1);
}

TEST_CASE("jump point process sampling") {
  rng::Stream s(5150);
  const double c1 = constants().c1;

  // Mean count over many unit-horizon replicates at eps = 1 and eps = 4.
  const int reps = 100000;
  double count1 = 0.0, count4 = 0.0;
  for (int i = 0; i < reps; ++i) {
    count1 += double(sample_jumps_above(1.0, 1.0, s).sizes.size());
    count4 += double(sample_jumps_above(1.0, 4.0, s).sizes.size());
  }
  const double lam1 = (2.0 / 3.0) * c1;
  CHECK(std::fabs(count1 / reps - lam1) < 3.0 * std::sqrt(lam1 / reps));
  CHECK(std::fabs((count4 / count1) - 0.125) < 0.02);

  // Structure checks on one long-horizon draw.
  const JumpSet set = sample_jumps_above(3000.0, 1.0, s);
  CHECK(set.cutoff == 1.0);
  CHECK(set.horizon == 3000.0);
  CHECK(set.sizes.size() == set.times.size());
  for (std::size_t i = 0; i < set.sizes.size(); ++i) {
    CHECK(set.sizes[i] > set.cutoff);
    if (i > 0) CHECK(set.sizes[i] <= set.sizes[i - 1]);
    CHECK(set.times[i] >= 0.0);
    CHECK(set.times[i] <= set.horizon);
  }
  // Tail counts at z in {1, 2, 4} within 3 sigma of c1 (2/3) z^{-3/2} t.
  for (double z : {1.0, 2.0, 4.0}) {
    std::size_t count = 0;
    for (double size : set.sizes) {
      if (size > z) ++count;
    }
    const double expect = 3000.0 * (2.0 / 3.0) * c1 / (z * std::sqrt(z));
    CHECK(std::fabs(double(count) - expect) < 3.0 * std::sqrt(expect));
  }
}

TEST_CASE("conditional truncated jump sum (closed quadrature form)") {
  struct Anchor {
    double t, y, eps, v, abs_tol;
  };
  const std::vector<Anchor> anchors = {
      {1.0, 0.0, 0.25, 1.122479162239825, 1e-8},
      {1.0, 0.0, 0.5, 0.6163763897644975, 1e-8},
      {1.0, 0.0, 1.0, 0.2194513801385902, 1e-8},
      {1.0, 0.0, 2.0, 0.01256339942546412, 1e-8},
      {1.0, 0.0, 4.0, 8.192181999231214e-9, 1e-10},
      {1.0, 0.7, 0.5, 1.1630809156947579, 1e-8},
      {2.0, -0.5, 1.0, 0.494120745046963, 1e-8}};
  for (const auto& a : anchors) {
    CHECK(std::fabs(truncated_jump_sum_conditional(a.t, a.y, a.eps) - a.v) <
          a.abs_tol);
  }
  // Monotone nonincreasing in eps at (1, 0).
  double prev = truncated_jump_sum_conditional(1.0, 0.0, 0.125);
  for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double cur = truncated_jump_sum_conditional(1.0, 0.0, eps);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
  // eps -> infinity limit vanishes (quadrature identity at (1, 0.7)).
  CHECK(std::fabs(truncated_jump_sum_conditional(1.0, 0.7, 1e12)) < 1e-4);
}

TEST_CASE("bridge band moments match independently derived values") {
  const BridgeBandMoments m = bridge_band_moments(0.5);
  CHECK(m.delta == 9e-5);
  CHECK(m.cutoff == 3e-3);
  check_rel(m.mean_u, 60.2208994293711378, 1e-12);
  check_rel(m.var_u, 0.0312916972467499263, 1e-12);
  check_rel(m.jump_rate, 1401.74029001120003, 1e-12);
  check_rel(m.mean_f, -0.00763961160814859821, 1e-8);
  check_rel(m.var_f, 1.21800328599741408e-8, 1e-7);
  check_rel(m.cov_uf, -1.32900270099520873e-5, 1e-8);
  check_rel(m.subdelta_f_mean, -5.32577637074317678e-5, 1e-6);
}

TEST_CASE("bridge monte carlo covers the closed form") {
  rng::Stream s(777001);
  const BridgeResult r = bridge_check(1.0, 0.0, 0.1,
                                      BridgeFunctional::trunc_sum, 1.0, 20000,
                                      s);
  CHECK(r.ess >= 100);
  CHECK(r.n == 20000);
  const double e4 = truncated_jump_sum_conditional(1.0, 0.0, 1.0);
  CHECK(e4 >= r.ci_lo);
  CHECK(e4 <= r.ci_hi);

  // Determinism for a fixed stream seed.
  rng::Stream s2(777001);
  const BridgeResult r2 = bridge_check(1.0, 0.0, 0.1,
                                       BridgeFunctional::trunc_sum, 1.0, 20000,
                                       s2);
  CHECK(r2.estimate == r.estimate);
  CHECK(r2.ci_lo == r.ci_lo);

  // Too-narrow kernel -> insufficient conditioning.
  rng::Stream s3(3);
  CHECK_THROWS_AS(bridge_check(1.0, 0.0, 1e-5, BridgeFunctional::trunc_sum,
                               1.0, 10000, s3),
                  InsufficientDataError);
  // Parameter validation.
  rng::Stream s4(4);
  CHECK_THROWS_AS(bridge_check(1.0, 0.0, 0.1, BridgeFunctional::trunc_sum,
                               1e-4, 10000, s4),
                  DomainError);
  CHECK_THROWS_AS(bridge_check(1.0, 0.0, 0.1, BridgeFunctional::trunc_sum,
                               1.0, 100, s4),
                  DomainError);
}

TEST_CASE("bridge gamma functional is stable under kernel halving") {
  rng::Stream s(424242);
  const BridgeResult a = bridge_check(0.3, 0.0, 0.12,
                                      BridgeFunctional::gamma_sum, 0.5, 12000,
                                      s);
  const BridgeResult b = bridge_check(0.3, 0.0, 0.06,
                                      BridgeFunctional::gamma_sum, 0.5, 24000,
                                      s);
  CHECK(std::isfinite(a.estimate));
  CHECK(std::isfinite(b.estimate));
  // Estimates agree within the union of the two CIs.
  const double lo = std::min(a.ci_lo, b.ci_lo) - 1e-12;
  const double hi = std::max(a.ci_hi, b.ci_hi) + 1e-12;
  CHECK(a.estimate >= lo);
  CHECK(a.estimate <= hi);
  CHECK(b.estimate >= lo);
  CHECK(b.estimate <= hi);
}
