#pragma once

#include "ratefield/quadrature.hpp"

namespace ratefield {

// Constant coefficient of the linearized fluctuation dynamics around one
// approximation point: alpha = exp(s*_0).
struct LocalCoeff {
  double alpha = 1.0;
  double sigma = 0.1;
};

struct GaussianMarginal {
  double variance = 0.0;          // sigma / (2 sqrt(alpha))
  double correlation_time = 0.0;  // 1 / (sigma sqrt(alpha))
  double validity_ratio = 0.0;    // sigma^2 / alpha; the regime wants << 1
  bool regime_warning = false;
};

// Causal kernel of the linearized dynamics,
//   G(t, u) = sigma / (2 sqrt(pi u)) exp(-alpha u - sigma^2 t^2 / (4u)),  u > 0,
// zero for u < 0 and for u = 0 at t != 0 (as a limit). The distributional
// point (0, 0) is rejected.
double green_function(double t, double u, const LocalCoeff& coeff);

// Stationary space/fictitious-time covariance C(t, u), symmetric in both
// arguments. Evaluated by adaptive quadrature of the equivalent single
// integral C(t,u) = int_{|u|}^inf G(t, w) dw (the Lorentzian factor of the
// Fourier form is itself an exponential integral; exchanging the order of
// integration collapses the k-integral to a Gaussian). Certified absolute
// tolerance abs_tol.
double spacetime_covariance(double t, double u, const LocalCoeff& coeff,
                            double abs_tol = 1e-10);

GaussianMarginal marginal(const LocalCoeff& coeff);

namespace detail {

// Direct quadrature of the Fourier form
//   (sigma/2pi) int dk cos(k sigma t) / (alpha + k^2) exp(-(alpha+k^2)|u|),
// usable for u != 0 only (the 1/k^2 tail at u = 0 defeats a certified
// cutoff). Kept as an independent cross-check route for tests.
double covariance_fourier(double t, double u, const LocalCoeff& coeff,
                          double abs_tol = 1e-9);

void check_coeff(const LocalCoeff& coeff);

}  // namespace detail

}  // namespace ratefield
