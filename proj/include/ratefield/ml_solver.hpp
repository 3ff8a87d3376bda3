#pragma once

#include <vector>

#include "ratefield/potential.hpp"

namespace ratefield {

struct SolverOptions {
  double tol_grad = -1.0;  // <= 0 selects the default 1e-10 * (1 + m)
  int max_iter = 200;
  double damping = 0.5;    // backtracking shrink factor, in (0, 1)
  double armijo_c = 1e-4;
};

struct MLResult {
  LogRatePath path;
  int iterations = 0;
  double final_grad_norm = 0.0;
  double compatibility_residual = 0.0;  // m - integral of exp(s*)
  bool converged = false;
  std::vector<double> value_history;    // potential after each accepted step
};

// Unique maximum-likelihood path solving grad V = 0 by damped Newton with
// tridiagonal solves. Initialization at the constant path ln(m / T).
MLResult solve_ml(const SpikeTrain& spikes, const ModelParams& params,
                  const TimeGrid& grid, const SolverOptions& opts = {});

// Same solver from an explicit starting path (used for uniqueness checks).
MLResult solve_ml_from(const LogRatePath& start, const SpikeTrain& spikes,
                       const ModelParams& params, const SolverOptions& opts = {});

// m - trapezoid integral of exp(s*); O(tolerance) at convergence because the
// gradient components sum to exactly that difference.
double compatibility_check(const MLResult& result, const SpikeTrain& spikes);

}  // namespace ratefield
