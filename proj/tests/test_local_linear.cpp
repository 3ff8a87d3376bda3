#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ratefield/local_linear.hpp"
#include "ratefield/quadrature.hpp"

using namespace ratefield;

namespace {
const LocalCoeff kRef{1.0, 0.1};  // alpha, sigma
}

TEST_CASE("green function: causality and the distributional point") {
  CHECK(green_function(1.0, -0.5, kRef) == 0.0);
  CHECK(green_function(1.0, 0.0, kRef) == 0.0);
  CHECK_THROWS_AS(green_function(0.0, 0.0, kRef), InvalidArgument);
  CHECK_THROWS_AS(green_function(0.0, 1.0, LocalCoeff{-1.0, 0.1}), InvalidArgument);
}

TEST_CASE("green function: space integral is exp(-alpha u)") {
  for (double u : {0.1, 0.7, 2.0}) {
    const double integral = integrate_decaying(
        [&](double t) { return 2.0 * green_function(t, u, kRef); }, 0.0,
        10.0 / (kRef.sigma * std::sqrt(kRef.alpha)));
    CHECK(integral == doctest::Approx(std::exp(-kRef.alpha * u)).epsilon(1e-9));
  }
}

TEST_CASE("green function: full space-time integral is 1/alpha") {
  const double inner = integrate_decaying(
      [&](double u) {
        return integrate_decaying(
            [&](double t) { return 2.0 * green_function(t, u, kRef); }, 0.0, 100.0,
            QuadratureOptions{1e-11, 48, 200000});
      },
      1e-9, 1.0);
  CHECK(inner == doctest::Approx(1.0 / kRef.alpha).epsilon(1e-7));
}

TEST_CASE("green function solves the linear PDE weakly") {
  // du G = (1/sigma^2) dtt G - alpha G for u > 0, checked by central differences
  const double t = 3.0, u = 0.8;
  const double hu = 1e-5, ht = 1e-3;
  const double du_fd =
      (green_function(t, u + hu, kRef) - green_function(t, u - hu, kRef)) / (2 * hu);
  const double dtt_fd =
      (green_function(t + ht, u, kRef) - 2.0 * green_function(t, u, kRef) +
       green_function(t - ht, u, kRef)) /
      (ht * ht);
  const double rhs = dtt_fd / (kRef.sigma * kRef.sigma) - kRef.alpha * green_function(t, u, kRef);
  CHECK(du_fd == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("covariance at u = 0 matches the closed form") {
  const double y2 = kRef.sigma / (2.0 * std::sqrt(kRef.alpha));
  const double rate = kRef.sigma * std::sqrt(kRef.alpha);
  for (double t = 0.0; t <= 10.0 / rate; t += 1.7 / rate) {
    const double c = spacetime_covariance(t, 0.0, kRef);
    CHECK(c == doctest::Approx(y2 * std::exp(-rate * t)).epsilon(1e-8));
  }
  CHECK(spacetime_covariance(0.0, 0.0, kRef) == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("covariance symmetry in both arguments") {
  for (auto [t, u] : {std::pair{2.0, 0.3}, {5.0, 1.1}, {0.5, 0.05}}) {
    const double c = spacetime_covariance(t, u, kRef);
    CHECK(spacetime_covariance(-t, u, kRef) == doctest::Approx(c).epsilon(1e-12));
    CHECK(spacetime_covariance(t, -u, kRef) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("covariance: quadrature route agrees with the Fourier form at u != 0") {
  for (auto [t, u] : {std::pair{0.0, 0.5}, {3.0, 0.2}, {10.0, 1.0}, {20.0, 3.0}}) {
    const double a = spacetime_covariance(t, u, kRef);
    const double b = detail::covariance_fourier(t, u, kRef, 1e-10);
    CHECK(a == doctest::Approx(b).epsilon(1e-8));
  }
  CHECK_THROWS_AS(detail::covariance_fourier(1.0, 0.0, kRef), InvalidArgument);
}

TEST_CASE("covariance equals twice the squared-kernel convolution") {
  // C(t,u) = 2 int dt' du' G(-t',-u') G(t-t', u-u'); reduce the t' integral
  // to a Gaussian convolution numerically via 2D quadrature on a grid
  const double t = 1.5, u = 0.4;
  QuadratureOptions q{1e-9, 40, 100000};
  const double conv = integrate_decaying(
      [&](double a) {  // a = -u' >= 0
        return integrate(
            [&](double tp) {
              return green_function(-tp, a, kRef) * green_function(t - tp, u + a, kRef);
            },
            -80.0, 80.0, q);
      },
      0.0, 0.5);
  CHECK(2.0 * conv == doctest::Approx(spacetime_covariance(t, u, kRef)).epsilon(1e-6));
}

TEST_CASE("marginal: closed forms, regime warning, scaling in alpha") {
  const GaussianMarginal m = marginal(kRef);
  CHECK(m.variance == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(m.correlation_time == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(!m.regime_warning);

  const GaussianMarginal bad = marginal(LocalCoeff{0.01, 0.1});
  CHECK(bad.validity_ratio == doctest::Approx(1.0));
  CHECK(bad.regime_warning);

  const GaussianMarginal m4 = marginal(LocalCoeff{4.0 * kRef.alpha, kRef.sigma});
  CHECK(m4.variance == doctest::Approx(0.5 * m.variance));
  CHECK(m4.correlation_time == doctest::Approx(0.5 * m.correlation_time));
}
