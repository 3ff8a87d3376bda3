#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ratefield/quadrature.hpp"

using namespace ratefield;

TEST_CASE("polynomials and smooth integrands") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-13));
  const double gauss =
      integrate([](double x) { return std::exp(-0.5 * x * x); }, -6.0, 6.0);
  CHECK(gauss ==
        doctest::Approx(std::sqrt(2.0 * M_PI) * std::erf(6.0 / std::sqrt(2.0)))
            .epsilon(1e-12));
}

TEST_CASE("oscillatory integrand") {
  const double v = integrate([](double x) { return std::cos(40.0 * x); }, 0.0, 1.0);
  CHECK(v == doctest::Approx(std::sin(40.0) / 40.0).epsilon(1e-10));
}

TEST_CASE("mild endpoint singularity") {
  QuadratureOptions opts;
  opts.abs_tol = 1e-9;
  const double v = integrate([](double x) { return 1.0 / std::sqrt(x); }, 1e-12, 1.0, opts);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("semi-infinite decaying integrals") {
  CHECK(integrate_decaying([](double x) { return std::exp(-x); }, 0.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate_decaying([](double x) { return std::exp(-x * x); }, 0.0, 1.0) ==
        doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-10));
  CHECK_THROWS_AS(integrate_decaying([](double) { return 1.0; }, 0.0, 1.0),
                  NumericalFailure);
}

TEST_CASE("zero-length interval") {
  CHECK(integrate([](double x) { return x; }, 2.0, 2.0) == 0.0);
}
