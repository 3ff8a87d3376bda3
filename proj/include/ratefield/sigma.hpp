#pragma once

#include "ratefield/indirect.hpp"
#include "ratefield/ml_solver.hpp"
#include "ratefield/spde_sampler.hpp"

namespace ratefield {

struct SigmaScan {
  Eigen::VectorXd sigma_grid;
  Eigen::VectorXd log_evidence;
  Eigen::VectorXd weights;  // normalized posterior over the grid points

  double map_sigma() const;
  double mean_sigma() const;
  // smallest/largest grid value bracketing the central `mass` of the posterior
  std::pair<double, double> credible_interval(double mass = 0.95) const;
};

// Saddle-point log evidence of the direct model at one sigma:
//   (n/2) ln(2 pi) - (1/2) logdet H - V(s*),
// with V including the sigma normalization f(sigma), logdet from the banded
// factorization, and n the number of path nodes.
double log_evidence(double sigma, const SpikeTrain& spikes, const TimeGrid& grid,
                    const SolverOptions& opts = {});

// Same for the indirect model; the Hessian is dense here.
double log_evidence_indirect(double sigma, const IndirectData& data,
                             const SolverOptions& opts = {});

// Posterior over a sigma grid under the flat-on-the-grid prior (the grid is
// conventionally log-spaced, making the prior flat in ln sigma).
SigmaScan sigma_posterior(const Eigen::VectorXd& sigma_grid, const SpikeTrain& spikes,
                          const TimeGrid& grid, const SolverOptions& opts = {});

SigmaScan sigma_posterior_indirect(const Eigen::VectorXd& sigma_grid,
                                   const IndirectData& data,
                                   const SolverOptions& opts = {});

// Default 16-point log-spaced grid over [0.01, 1].
Eigen::VectorXd default_sigma_grid();

// sigma-marginalized posterior: resample the per-sigma sample sets with the
// scan weights.
SampleSet mixed_posterior(const SigmaScan& scan, const std::vector<SampleSet>& per_sigma,
                          RngSeed seed = RngSeed{777});

}  // namespace ratefield
