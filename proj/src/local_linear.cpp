#include "ratefield/local_linear.hpp"

#include <cmath>

namespace ratefield {

namespace detail {

void check_coeff(const LocalCoeff& coeff) {
  if (!(coeff.alpha > 0.0)) throw InvalidArgument("LocalCoeff: alpha must be positive");
  if (!(coeff.sigma > 0.0)) throw InvalidArgument("LocalCoeff: sigma must be positive");
}

}  // namespace detail

double green_function(double t, double u, const LocalCoeff& coeff) {
  detail::check_coeff(coeff);
  if (u < 0.0) return 0.0;
  if (u == 0.0) {
    if (t == 0.0)
      throw InvalidArgument("green_function: (t, u) = (0, 0) is a distributional point");
    return 0.0;
  }
  const double s = coeff.sigma;
  return s / (2.0 * std::sqrt(M_PI * u)) *
         std::exp(-coeff.alpha * u - s * s * t * t / (4.0 * u));
}

double spacetime_covariance(double t, double u, const LocalCoeff& coeff,
                            double abs_tol) {
  detail::check_coeff(coeff);
  const double a = coeff.alpha;
  const double s = coeff.sigma;
  const double b = 0.5 * s * std::abs(t);  // exponent is -(a v^2 + (b/v)^2)

  // After w = v^2, C(t,u) = (s/sqrt(pi)) int_{sqrt|u|}^inf exp(-a v^2 - b^2/v^2) dv:
  // smooth, positive, Gaussian-tailed.
  const double v0 = std::sqrt(std::abs(u));
  double vmax = std::max({v0 + 1.0, 2.0 / std::sqrt(a)});
  const double scale = s / std::sqrt(M_PI);
  while (scale * std::exp(-a * vmax * vmax) / (2.0 * a * vmax) > 0.25 * abs_tol)
    vmax *= 1.5;

  QuadratureOptions q;
  q.abs_tol = 0.5 * abs_tol / scale;
  const double integral = integrate(
      [a, b](double v) {
        const double r = b / v;
        return std::exp(-a * v * v - r * r);
      },
      v0, vmax, q);
  return scale * integral;
}

GaussianMarginal marginal(const LocalCoeff& coeff) {
  detail::check_coeff(coeff);
  GaussianMarginal m;
  m.variance = coeff.sigma / (2.0 * std::sqrt(coeff.alpha));
  m.correlation_time = 1.0 / (coeff.sigma * std::sqrt(coeff.alpha));
  m.validity_ratio = coeff.sigma * coeff.sigma / coeff.alpha;
  m.regime_warning = m.validity_ratio >= 0.1;
  return m;
}

namespace detail {

double covariance_fourier(double t, double u, const LocalCoeff& coeff, double abs_tol) {
  check_coeff(coeff);
  const double au = std::abs(u);
  if (au == 0.0)
    throw InvalidArgument("covariance_fourier: requires u != 0 (1/k^2 tail)");
  const double a = coeff.alpha;
  const double s = coeff.sigma;
  // tail bound: (s/pi) int_K^inf e^{-(a+k^2)|u|}/(a+k^2) dk <= (s/pi) e^{-a|u|} e^{-K^2|u|}/(2K|u|a...)
  double K = std::sqrt(std::max(1.0, std::log(4.0 * s / (M_PI * abs_tol)) / au)) + 1.0;
  while (s / M_PI * std::exp(-(a + K * K) * au) / ((a + K * K) * 2.0 * K * au + 1e-300) >
         0.25 * abs_tol)
    K *= 1.5;
  QuadratureOptions q;
  q.abs_tol = 0.5 * abs_tol;
  const double val = integrate(
      [=](double k) {
        return s / M_PI * std::cos(k * s * t) / (a + k * k) *
               std::exp(-(a + k * k) * au);
      },
      0.0, K, q);
  return val;
}

}  // namespace detail

}  // namespace ratefield
