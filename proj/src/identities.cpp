#include "sbmlab/identities.hpp"

#include <algorithm>
#include <cmath>

#include "sbmlab/drift.hpp"
#include "sbmlab/quadrature.hpp"
#include "sbmlab/specfun.hpp"
#include "sbmlab/stabledist.hpp"

namespace sbmlab::identities {

namespace {

// Tail of int_A^inf f(u) du via the substitution u = A / v, v in (0, 1]:
// polynomially decaying integrands become bounded (or integrably singular)
// on a finite interval.
template <class F>
double poly_tail(F&& f, double A, double tol) {
  return quad::finite_singular(
      [&f, A](double v) { return f(A / v) * A / (v * v); }, 0.0, 1.0, tol);
}

double chi_laplace(double lambda) {
  const auto f = [lambda](double z) {
    return specfun::chi(z) * std::exp(-lambda * z);
  };
  const double body = quad::finite_singular(f, 0.0, 40.0, 1e-10);
  const double tail = quad::semi_infinite(f, 40.0, 1e-10);
  return body + tail;
}

}  // namespace

std::vector<IdentityRow> identity_suite() {
  std::vector<IdentityRow> rows;
  const double c1 = stabledist::constants().c1;

  // --- Airy values at the origin against Gamma-function closed forms.
  rows.push_back({"airy_ai_origin", specfun::airy_ai(0.0),
                  std::pow(3.0, -2.0 / 3.0) / std::tgamma(2.0 / 3.0), 1e-13});
  rows.push_back({"airy_aip_origin", specfun::airy_aip(0.0),
                  -std::pow(3.0, -1.0 / 3.0) / std::tgamma(1.0 / 3.0), 1e-13});

  // --- Laplace transform of chi: int_0^inf chi(z) e^{-lambda z} dz
  //     equals (1 + sqrt(lambda))^{-3}.
  for (double lambda : {0.5, 1.0, 2.0}) {
    rows.push_back({"chi_laplace_lambda_" + std::to_string(lambda).substr(0, 3),
                    chi_laplace(lambda),
                    std::pow(1.0 + std::sqrt(lambda), -3.0), 1e-6});
  }

  // --- gamma' integrals: total mass 2 and a vanishing 1/sqrt(u) moment.
  {
    const auto gp = [](double u) { return specfun::gamma_prime(u); };
    const double total = quad::finite_singular(gp, 0.0, 44.0, 1e-10) +
                         poly_tail(gp, 44.0, 1e-10);
    rows.push_back({"gamma_prime_total_mass", total, 2.0, 1e-4});

    const auto gps = [](double u) {
      return specfun::gamma_prime(u) / std::sqrt(u);
    };
    const double moment = quad::finite_singular(gps, 0.0, 44.0, 1e-10) +
                          poly_tail(gps, 44.0, 1e-10);
    rows.push_back({"gamma_prime_sqrt_moment", moment, 0.0, 1e-4});
  }

  // --- c1 int_0^inf (2 - gamma(3z/2)) z^{-1/2} dz = 8.
  {
    const auto f = [](double z) {
      return (2.0 - specfun::gamma_fn(1.5 * z)) / std::sqrt(z);
    };
    const double val =
        c1 * (quad::finite_singular(f, 0.0, 30.0, 1e-10) +
              poly_tail(f, 30.0, 1e-10));
    rows.push_back({"gamma_second_moment", val, 8.0, 1e-4});
  }

  // --- Stable density: normalization, mean, and the two-route agreement.
  {
    const auto d = [](double y) { return stabledist::p1(y); };
    const double norm =
        quad::finite(d, -12.0, 15.0, 1e-12) + poly_tail(d, 15.0, 1e-10) +
        quad::semi_infinite([](double u) { return stabledist::p1(-12.0 - u); },
                            0.0, 1e-12);
    rows.push_back({"p1_normalization", norm, 1.0, 1e-6});

    const auto yd = [](double y) { return y * stabledist::p1(y); };
    const double mean =
        quad::finite(yd, -12.0, 15.0, 1e-12) + poly_tail(yd, 15.0, 1e-10) +
        quad::semi_infinite(
            [](double u) { return (-12.0 - u) * stabledist::p1(-12.0 - u); },
            0.0, 1e-12);
    rows.push_back({"p1_mean", mean, 0.0, 1e-5});

    double max_diff = 0.0;
    for (double y : {-6.0, -3.0, -1.0, -0.3, 0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      max_diff = std::max(
          max_diff, std::fabs(stabledist::p1(y) - stabledist::p1_fourier(y, 1e-8)));
    }
    rows.push_back({"p1_route_agreement_max_diff", max_diff, 0.0, 1e-6});
  }

  // --- r(0) = 6^{-1/3} Ai(0) / Ai'(0).
  rows.push_back({"ratio_r_origin", stabledist::ratio_r(0.0),
                  std::pow(6.0, -1.0 / 3.0) * specfun::airy_ai(0.0) /
                      specfun::airy_aip(0.0),
                  1e-12});

  // --- Jump-compensation identity at (t, y) = (1, 0.7):
  //     c1 int_0^inf (p1(y) - p1(y - z)) z^{-3/2} dz = -y p1(y).
  {
    const double y = 0.7;
    const double py = stabledist::p1(y);
    const double body = quad::finite_singular(
        [py, y](double z) {
          return (py - stabledist::p1(y - z)) / (z * std::sqrt(z));
        },
        0.0, 100.0, 1e-9);
    // Beyond z = 100 the shifted density is doubly-exponentially small, so
    // the tail is the p1(y) term alone: int_100^inf z^{-3/2} dz = 2/10.
    const double tail = py * 0.2;
    rows.push_back({"jump_compensation_identity", c1 * (body + tail),
                    -y * py, 1e-4});
  }

  // --- Reduced-drift layer: invariant-law normalization and mean, the root
  //     of b, and constancy of s'(z) * nu(z).
  {
    const auto nu = [](double z) { return drift::invariant_density(z); };
    const double mass = quad::finite(nu, -30.0, 10.0, 1e-12, nullptr, 18);
    rows.push_back({"invariant_law_normalization", mass, 1.0, 1e-6});

    const double mean =
        quad::finite([](double z) { return z * drift::invariant_density(z); },
                     -30.0, 10.0, 1e-12, nullptr, 18);
    rows.push_back({"invariant_law_mean", mean, -1.857472236331986, 1e-6});

    rows.push_back({"reduced_drift_root", drift::b(-2.11329591441941563), 0.0,
                    1e-9});

    const double ref =
        drift::scale_derivative(0.0) * drift::invariant_density(0.0);
    double max_dev = 0.0;
    for (double z : {-2.0, 1.0}) {
      max_dev = std::max(
          max_dev,
          std::fabs(drift::scale_derivative(z) * drift::invariant_density(z) /
                        ref -
                    1.0));
    }
    rows.push_back({"scale_speed_product_constancy", max_dev, 0.0, 1e-10});
  }

  return rows;
}

double gamma_bound_constant_estimate() {
  double sup = 0.0;
  // 481 log-spaced points over 12 decades.
  for (int k = 0; k <= 480; ++k) {
    const double z = std::pow(10.0, -6.0 + 12.0 * k / 480.0);
    const double bound = std::min(1.0, z * z);
    sup = std::max(sup, std::fabs(specfun::gamma_fn(z)) / bound);
  }
  return sup;
}

}  // namespace sbmlab::identities
