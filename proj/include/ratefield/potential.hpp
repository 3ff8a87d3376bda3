#pragma once

#include <Eigen/Core>

#include "ratefield/grid.hpp"
#include "ratefield/tridiag.hpp"

namespace ratefield {

struct ModelParams {
  double sigma = 0.1;  // volatility of the log-rate prior, units 1/sqrt(time)
};

// sigma-dependent normalization of the prior path density:
// f(sigma) = (T/dt) ln(sigma) + sigma^2 T / 8.
// It diverges as dt -> 0 at fixed sigma, so it is only meaningful when
// comparing potentials across sigma on one fixed grid (sigma inference).
double sigma_norm(const ModelParams& params, const TimeGrid& grid);

struct PotentialEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  SymTridiagd hessian;
};

// Posterior potential up to documented constants:
//   [f(sigma)] + (s_n - s_0)/2 + QV/(2 sigma^2 dt) - sum_j c_j s_j
//   + sum_j w_j dt exp(s_j)
// with trapezoid weights w and per-node event counts c. Only differences of
// values are contractual; the dropped constants are the sigma-independent
// Gaussian-increment normalization and the flat prior on s_0.
double potential_value(const LogRatePath& path, const SpikeTrain& spikes,
                       const ModelParams& params, bool include_sigma_norm = false);

// Discrete gradient of the potential above. The Laplacian stencil uses
// reflected ghosts s_{-1} = s_0, s_{n+1} = s_n; the endpoint components carry
// the -1/2 (node 0) and +1/2 (node n) nodal terms.
Eigen::VectorXd potential_gradient(const LogRatePath& path, const SpikeTrain& spikes,
                                   const ModelParams& params);

// Second derivative: off diagonal -1/(sigma^2 dt); diagonal 2/(sigma^2 dt)
// interior, 1/(sigma^2 dt) at the ends, plus w_j dt exp(s_j) everywhere.
SymTridiagd potential_hessian(const LogRatePath& path, const SpikeTrain& spikes,
                              const ModelParams& params);

PotentialEval potential_eval(const LogRatePath& path, const SpikeTrain& spikes,
                             const ModelParams& params, bool include_sigma_norm = false);

// Prior-only pieces (no measurement term); shared with the indirect model.
double prior_value(const LogRatePath& path, const ModelParams& params,
                   bool include_sigma_norm = false);
Eigen::VectorXd prior_gradient(const LogRatePath& path, const ModelParams& params);
SymTridiagd prior_hessian(const TimeGrid& grid, const ModelParams& params);

}  // namespace ratefield
