#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "ratefield/perturbative.hpp"
#include "ratefield/quadrature.hpp"

using namespace ratefield;

namespace {
const LocalCoeff kRef{1.0, 0.1};
const double kY2 = 0.05;                       // sigma / (2 sqrt(alpha))
const double kRate = 0.1;                      // sigma sqrt(alpha)
}  // namespace

TEST_CASE("nonlinearity moments at y2 = 0.05") {
  const MomentSet m = nonlinearity_moments(0.05);
  CHECK(m.mean == doctest::Approx(-0.025).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(0.05 + 0.0025 / 9.0).epsilon(1e-14));
  CHECK(m.third_raw == doctest::Approx(-(11.0 / 6.0) * 0.0025).epsilon(1e-14));
  CHECK(m.third_raw == doctest::Approx(-4.58333e-3).epsilon(1e-5));
  CHECK(m.fourth_raw == doctest::Approx(3.0 * 0.0025).epsilon(1e-14));
}

TEST_CASE("nonlinearity moments: y2 -> 0 limit is a centered Gaussian") {
  const MomentSet m = nonlinearity_moments(1e-9);
  CHECK(std::abs(m.mean) < 1e-9);
  CHECK(m.variance == doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(std::abs(m.central_third()) < 1e-17);
  CHECK(std::abs(m.excess_kurtosis()) < 1e-17);
}

TEST_CASE("fluctuation-theorem bookkeeping closes at fourth order") {
  for (double y2 : {0.05, 0.1, 0.2}) {
    const MomentSet m = nonlinearity_moments(y2);
    const double raw2 = m.variance + m.mean * m.mean;
    const double sum =
        1.0 + m.mean + 0.5 * raw2 + m.third_raw / 6.0 + m.fourth_raw / 24.0;
    // the y2^2 terms cancel exactly; only truncated higher orders remain
    CHECK(std::abs(sum - 1.0) < 1e-12 + 2.0 * y2 * y2 * y2);
  }
}

TEST_CASE("kernel J: quadrature equals the closed form -C(t,0)^2") {
  for (double t : {0.0, 2.0, 5.0, 10.0, 20.0}) {
    const double j = kernel_J(t, kRef, 1e-12);
    const double c0 = kY2 * std::exp(-kRate * std::abs(t));
    CHECK(j == doctest::Approx(-c0 * c0).epsilon(1e-8));
    CHECK(j <= 0.0);
  }
}

TEST_CASE("kernel J: even in t") {
  for (double t : {1.0, 4.5, 12.0}) {
    CHECK(kernel_J(t, kRef, 1e-12) ==
          doctest::Approx(kernel_J(-t, kRef, 1e-12)).epsilon(1e-9));
  }
}

TEST_CASE("kernel J: signed bound and correlation-scale decay") {
  // J_t <= (y2^2/2) exp(-|t| sigma sqrt(2 alpha)) holds with the sign; the
  // magnitude decays even faster (rate 2 sigma sqrt(alpha) > sqrt(2) rate)
  const double bound_rate = kRef.sigma * std::sqrt(2.0 * kRef.alpha);
  for (double t = 0.0; t <= 20.0 / kRate; t += 2.0 / kRate) {
    const double j = kernel_J(t, kRef, 1e-12);
    const double bound = 0.5 * kY2 * kY2 * std::exp(-t * bound_rate);
    CHECK(j <= bound);
    CHECK(std::abs(j) <= 2.0 * bound * 1.0000001);
  }
  // far field: |J| < 1e-3 y2^2 at 20 correlation times
  CHECK(std::abs(kernel_J(20.0 / kRate, kRef, 1e-12)) < 1e-3 * kY2 * kY2);
}

TEST_CASE("kernel K: frozen value at the origin") {
  // K(0,0) = 3 (1 - 1/sqrt(2)) y2^3 from the rho-integral reduction
  const double k00 = kernel_K(0.0, 0.0, kRef, 1e-12);
  const double expected = 3.0 * (1.0 - 1.0 / std::sqrt(2.0)) * kY2 * kY2 * kY2;
  CHECK(k00 == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("kernel K: decay away from the origin") {
  const double peak = std::abs(kernel_K(0.0, 0.0, kRef, 1e-10));
  const double far = std::abs(kernel_K(20.0 / kRate, 20.0 / kRate, kRef, 1e-10));
  CHECK(far < 1e-3 * peak);
  const double far2 = std::abs(kernel_K(20.0 / kRate, -20.0 / kRate, kRef, 1e-10));
  CHECK(far2 < 1e-3 * peak);
}

TEST_CASE("kernel K: scaling under alpha -> c alpha") {
  // K ~ sigma^3 alpha^{-3/2} g(sigma sqrt(alpha) t, ...)
  const double c = 2.0;
  const LocalCoeff scaled{c * kRef.alpha, kRef.sigma};
  const double t = 3.0, t2 = -1.0;
  const double k1 = kernel_K(t, t2, kRef, 1e-11);
  const double k2 = kernel_K(t / std::sqrt(c), t2 / std::sqrt(c), scaled, 1e-11);
  CHECK(k2 * std::pow(c, 1.5) == doctest::Approx(k1).epsilon(1e-6));
}

TEST_CASE("kernel K: two quadrature tolerances agree") {
  const double a = kernel_K(2.0, 1.0, kRef, 1e-8);
  const double b = kernel_K(2.0, 1.0, kRef, 1e-10);
  CHECK(std::abs(a - b) < 1e-7);
}

TEST_CASE("tabulated kernels agree with direct quadrature") {
  for (double t : {0.0, 1.0, 7.5, 30.0, 90.0}) {
    CHECK(detail::kernel_J_tabulated(t, kRef) ==
          doctest::Approx(kernel_J(t, kRef, 1e-12)).epsilon(2e-5));
  }
  for (auto [t, t2] : {std::pair{0.0, 0.0}, {3.0, -2.0}, {10.0, 5.0}, {25.0, 20.0}}) {
    const double direct = kernel_K(t, t2, kRef, 1e-11);
    const double tab = detail::kernel_K_tabulated(t, t2, kRef);
    CHECK(std::abs(tab - direct) < 5e-5 * kY2 * kY2 * kY2 + 1e-4 * std::abs(direct));
  }
}

namespace {

ShapeDeviation make_window(double half_width, double dt,
                           const std::function<double(double)>& f) {
  const Index h = static_cast<Index>(half_width / dt);
  TimeGrid w(2.0 * h * dt, 2 * h);
  Eigen::VectorXd v(w.nodes());
  for (Index k = 0; k <= 2 * h; ++k) v[k] = f((k - h) * dt);
  v[h] = 0.0;
  return ShapeDeviation{w, v, h};
}

}  // namespace

TEST_CASE("variance correction: f = 0 reduces to y2^2/9 exactly") {
  const ShapeDeviation f = make_window(10.0 / kRate, 0.25, [](double) { return 0.0; });
  CHECK(variance_correction(f, kRef) ==
        doctest::Approx(kY2 * kY2 / 9.0).epsilon(1e-14));
}

TEST_CASE("mean correction: f = 0 gives -y2/2") {
  const ShapeDeviation f = make_window(10.0 / kRate, 0.25, [](double) { return 0.0; });
  CHECK(mean_correction(f, kRef) == doctest::Approx(-0.5 * kY2).epsilon(1e-12));
}

TEST_CASE("variance correction: antisymmetric f kills the J term") {
  const double amp = 0.2;
  const auto f_odd = [&](double t) { return amp * std::sin(kRate * t); };
  const ShapeDeviation f = make_window(10.0 / kRate, 0.1, f_odd);
  const double total = variance_correction(f, kRef);

  // J term computed separately vanishes by parity
  const Eigen::VectorXd w = f.window.trapezoid_weights();
  double jterm = 0.0;
  for (Index k = 0; k < f.values.size(); ++k) {
    const double t = f.window.time_at(k) - f.window.time_at(f.center);
    jterm += detail::kernel_J_tabulated(t, kRef) * f.values[k] * w[k] * f.window.dt();
  }
  CHECK(std::abs(jterm) < 1e-10);
  // remaining correction beyond y2^2/9 is purely the K quadratic form
  CHECK(std::abs(total - kY2 * kY2 / 9.0) > 1e-8);
}

TEST_CASE("window coverage is enforced") {
  const ShapeDeviation f = make_window(3.0 / kRate, 0.25, [](double) { return 0.0; });
  CHECK_THROWS_AS(variance_correction(f, kRef), CoverageError);
  try {
    mean_correction(f, kRef);
    FAIL("expected CoverageError");
  } catch (const CoverageError& e) {
    CHECK(e.required_half_width == doctest::Approx(8.0 / kRate));
  }
}

TEST_CASE("corrections scale as y2^2 under sigma -> c sigma at fixed alpha") {
  const double c = 2.0;
  const LocalCoeff big{kRef.alpha, c * kRef.sigma};
  const ShapeDeviation f0 = make_window(10.0 / kRate, 0.2, [](double) { return 0.0; });
  const double v1 = variance_correction(f0, kRef);
  // window stays valid for the larger sigma (shorter correlation time)
  const double v2 = variance_correction(f0, big);
  CHECK(v2 / v1 == doctest::Approx(c * c).epsilon(1e-10));
}

TEST_CASE("sqrt(Q) constant: value, parameter independence, indicator guard") {
  const double sq = q_constant();
  CHECK(sq == doctest::Approx(0.0884).epsilon(2e-3));
  // the closed-form value is 1/(8 sqrt 2)
  CHECK(sq == doctest::Approx(1.0 / (8.0 * std::sqrt(2.0))).epsilon(5e-4));

  const double q1 = detail::q_constant_at(LocalCoeff{1.0, 0.1}, true);
  const double q2 = detail::q_constant_at(LocalCoeff{2.0, 0.2}, true);
  CHECK(std::abs(q1 - q2) <= 1e-3 * q1);

  const double q_unrestricted = detail::q_constant_at(LocalCoeff{1.0, 0.1}, false);
  CHECK(q_unrestricted == doctest::Approx(2.0 * q1).epsilon(1e-6));
  CHECK(std::abs(q_unrestricted - q1) > 0.5 * q1);
}

TEST_CASE("shape-term dominance at sigma = 0.1, alpha = 1") {
  // std of J.f over GBM shapes = (sigma/sqrt(alpha))^{3/2} sqrt(Q) exceeds y2^2/9
  const double shape_std = std::pow(kRef.sigma / std::sqrt(kRef.alpha), 1.5) * q_constant();
  CHECK(shape_std > kY2 * kY2 / 9.0);
  CHECK(shape_std / (kY2 * kY2 / 9.0) > 5.0);
}

TEST_CASE("edgeworth density: Gaussian moments give the exact Gaussian") {
  MomentSet m;
  m.mean = 0.3;
  m.variance = 0.04;
  // about-zero moments of a Gaussian with that mean/variance
  m.third_raw = m.mean * m.mean * m.mean + 3.0 * m.mean * m.variance;
  m.fourth_raw = 3.0 * m.variance * m.variance +
                 6.0 * m.mean * m.mean * m.variance + std::pow(m.mean, 4.0);
  const EdgeworthDensity d(m);
  for (double x : {0.0, 0.2, 0.3, 0.5, 0.8}) {
    const double ref = std::exp(-0.5 * (x - 0.3) * (x - 0.3) / 0.04) /
                       std::sqrt(2.0 * M_PI * 0.04);
    CHECK(d(x) == doctest::Approx(ref).epsilon(1e-6));
  }
  CHECK(d.clipped_mass() < 1e-12);
}

TEST_CASE("edgeworth density from nonlinearity moments normalizes") {
  const EdgeworthDensity d(nonlinearity_moments(0.05));
  const double total = integrate([&](double x) { return d(x); }, d.window_lo(),
                                 d.window_hi(), QuadratureOptions{1e-9, 40, 100000});
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("moment conversions are exact") {
  MomentSet m;
  m.mean = -0.1;
  m.variance = 0.2;
  m.third_raw = 0.05;
  m.fourth_raw = 0.3;
  const double mu = m.mean;
  const double raw2 = m.variance + mu * mu;
  CHECK(m.central_third() ==
        doctest::Approx(m.third_raw - 3.0 * mu * raw2 + 2.0 * mu * mu * mu));
  CHECK(m.central_fourth() ==
        doctest::Approx(m.fourth_raw - 4.0 * mu * m.third_raw +
                        6.0 * mu * mu * raw2 - 3.0 * std::pow(mu, 4.0)));
}
