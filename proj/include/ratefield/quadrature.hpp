#pragma once

#include <functional>

#include "ratefield/errors.hpp"

namespace ratefield {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 48;      // adaptive bisection depth
  int max_intervals = 200000;
};

// Adaptive Gauss-Kronrod 7/15 on [a, b]. Throws NumericalFailure if the
// error estimate cannot be brought below abs_tol within the interval budget.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

// Integral over [a, inf) of a function with (at least) exponential decay.
// Marches over doubling segments until two consecutive segments contribute
// less than a quarter of the tolerance each.
double integrate_decaying(const std::function<double(double)>& f, double a,
                          double initial_span, const QuadratureOptions& opts = {});

}  // namespace ratefield
