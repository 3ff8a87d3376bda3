#pragma once

#include <Eigen/Core>

#include "ratefield/grid.hpp"
#include "ratefield/local_linear.hpp"

namespace ratefield {

// One-point marginal moments. The third and fourth entries are moments about
// zero (the linearization point), which is what the perturbative expansion
// and the fluctuation-theorem bookkeeping constrain directly; central
// moments and cumulants are derived through the exact conversions below.
struct MomentSet {
  double mean = 0.0;
  double variance = 0.0;     // central second moment
  double third_raw = 0.0;    // <x^3> about zero
  double fourth_raw = 0.0;   // <x^4> about zero
  double se_mean = 0.0, se_variance = 0.0, se_third = 0.0, se_fourth = 0.0;

  double raw_second() const { return variance + mean * mean; }
  double central_third() const;
  double central_fourth() const;
  double excess_kurtosis() const;
};

// Flat-coefficient (f = 0) moments of the nonlinear fluctuations to second
// order in y2 = <y^2>:
//   mean = -y2/2, Var = y2 + y2^2/9, <x^3> = -(11/6) y2^2, <x^4> = 3 y2^2.
// Prints a regime warning for y2 > 0.3.
MomentSet nonlinearity_moments(double y2);

// Linear response kernel J_t = -2 int du G(-t,-u) C(t,u), evaluated by nested
// adaptive quadrature. J is even in t and negative.
double kernel_J(double t, const LocalCoeff& coeff, double abs_tol = 1e-10);

// Quadratic response kernel
//   K(t,t') = int du du' G(-t,-u) [G(t',u') C(t-t',u-u') + 2 G(t-t',u-u') C(t',u')].
// Both double integrals collapse to single rho-integrals: the fictitious-time
// convolution of two causal kernels has the closed form
//   (G(x1,.) * G(x2,.))(rho) = e^{-alpha rho} (sigma^2/4) erfc(sigma(|x1|+|x2|)/(2 sqrt rho)),
// (check the Laplace transforms), so
//   K(t,t') = T(t,t',t-t') + 2 T(t,t-t',t')
// with T(x1,x2,x3) = int_0^inf d rho (G(x1)*G(x2))(rho) C(x3,rho).
double kernel_K(double t, double t2, const LocalCoeff& coeff, double abs_tol = 1e-10);

// Deviation f_t = exp(s*_t) - exp(s*_center) on a window of the solve grid
// centered at the approximation point.
struct ShapeDeviation {
  TimeGrid window;        // window grid; offsets are (j - center) * dt
  Eigen::VectorXd values; // f per window node, zero at the center
  Index center = 0;       // index of the approximation point inside the window
};

// Extract the window around `node` with the given half width (time units).
ShapeDeviation shape_from_path(const LogRatePath& s_star, Index node,
                               double half_width);

struct CorrectionOptions {
  double abs_tol = 1e-10;          // kernel quadrature tolerance
  double min_half_width_corr = 8.0;  // required window half width, correlation times
};

// Variance of the local marginal minus y2:
//   y2^2/9 + sum_t J_t f_t dt + sum_{t,t'} K(t,t') f_t f_t' dt^2
// (trapezoid sums on the window grid; kernels from tabulated quadrature).
double variance_correction(const ShapeDeviation& f, const LocalCoeff& coeff,
                           const CorrectionOptions& opts = {});

// Mean of the local marginal:
//   -(y2 + J.f + f.K.f)/2 - (3/16) y2 sum_t [int du G(t,u)] f_t^2 / alpha dt.
double mean_correction(const ShapeDeviation& f, const LocalCoeff& coeff,
                       const CorrectionOptions& opts = {});

// Parameter-free constant of the shape-term variance:
//   Q = (sqrt(alpha)/sigma)^3 int int J_t J_t' 1_{t t' > 0} alpha^2 sigma^2 min(|t|,|t'|) dt dt'.
// Evaluated at two parameter pairs; they must agree to 1e-3 relative.
// Returns sqrt(Q) (about 0.0884).
double q_constant();

// Edgeworth density from a MomentSet: Gaussian base (mean, variance) with
// cumulant corrections kappa3 = central third, kappa4 = central fourth - 3 var^2,
// clipped at zero and renormalized over [mean - 8 sd, mean + 8 sd].
class EdgeworthDensity {
public:
  explicit EdgeworthDensity(const MomentSet& moments);

  double operator()(double x) const;   // normalized, clipped density
  double unclipped(double x) const;    // raw expansion, may be negative
  double clipped_mass() const { return clipped_mass_; }
  double window_lo() const { return lo_; }
  double window_hi() const { return hi_; }

private:
  double mean_, sd_, g3_, g4_;
  double lo_, hi_, norm_, clipped_mass_;
};

EdgeworthDensity edgeworth_density(const MomentSet& moments);

namespace detail {

// Q evaluation at explicit parameters; same_sign_only = false drops the
// 1_{t t' > 0} indicator (used by a guard test).
double q_constant_at(const LocalCoeff& coeff, bool same_sign_only);

// Tabulated kernel evaluators used by the correction sums; exposed so tests
// can compare them against the direct quadrature definitions.
double kernel_J_tabulated(double t, const LocalCoeff& coeff);
double kernel_K_tabulated(double t, double t2, const LocalCoeff& coeff);

}  // namespace detail

}  // namespace ratefield
