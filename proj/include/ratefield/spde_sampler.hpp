#pragma once

#include <vector>

#include "ratefield/grid.hpp"
#include "ratefield/perturbative.hpp"
#include "ratefield/potential.hpp"
#include "ratefield/random.hpp"

namespace ratefield {

enum class DriftMode {
  FullNonlinear,    // -e^{s*_t} (e^x - 1), path-dependent coefficient
  Linearized,       // -e^{s*_t} x
  FlatCoefficient,  // -alpha (e^x - 1) with one constant alpha (f = 0)
};

struct SamplerOptions {
  double du = 0.0;        // fictitious-time step; <= 0 selects 0.1 / max(alpha_eff)
  double burn_in = -1.0;  // fictitious time discarded; < 0 selects 20 / min(alpha_eff)
  Index n_samples = 20000;  // retained samples, pooled over chains
  double thinning = -1.0;   // fictitious time between retained; < 0 selects 1 / min(alpha_eff)
  RngSeed seed{20240101};
  DriftMode drift_mode = DriftMode::FullNonlinear;
  double flat_alpha = 0.0;  // FlatCoefficient only; 0 -> exp(s*) at the center node
  double theta = 0.5;       // implicitness of the linear part; 1/2 keeps the exact
                            // Gaussian stationary law for the linear dynamics
  bool reaction_implicit = false;  // one Newton sub-iteration on the reaction term
  int n_chains = 1;
  std::vector<Index> track_nodes;  // empty -> center node
  bool keep_paths = false;
  double blowup_threshold = 50.0;
};

struct SampleSet {
  Eigen::MatrixXd marginals;  // retained samples x tracked nodes
  std::vector<Index> tracked_nodes;
  Eigen::MatrixXd paths;      // retained samples x grid nodes (if kept)
  Eigen::VectorXd ess;        // effective sample size per tracked node
  Eigen::VectorXd exp_x_mean; // fluctuation-theorem statistic <e^x> per tracked node
  Eigen::VectorXd exp_x_se;
  std::vector<double> v_trace;  // potential of retained states (stationarity check)
  double du = 0.0, burn_in = 0.0, thinning = 0.0;
  int n_chains = 1;
  Index samples_per_chain = 0;

  Index column_of(Index node) const;
};

// Langevin sampling of the posterior fluctuations x = s - s*. The diffusion
// (and the linear part of the reaction) is stepped with a theta-implicit
// tridiagonal solve; the nonlinear remainder e^x - 1 - x is explicit. Noise
// per node and step is sqrt(2 du / dt) xi, realizing <eta eta'> = 2 delta delta
// on the grid.
SampleSet sample(const LogRatePath& s_star, const ModelParams& params,
                 const SamplerOptions& opts);

// Mean and central/about-zero moments 2-4 at one grid node, with batch-means
// standard errors. Requires effective sample size >= 100 at that node.
MomentSet moment_estimates(const SampleSet& samples, Index node);

struct HistogramTable {
  Eigen::VectorXd centers;
  Eigen::VectorXd density;     // normalized histogram
  Eigen::VectorXd se;          // per-bin Monte-Carlo error (batch means)
  Eigen::VectorXd gauss_ref;   // bin-averaged N(0, gauss_variance) companion
  double bin_width = 0.0;
};

// Normalized histogram of the marginal at a node plus the local-linear
// Gaussian companion column for delta-p comparisons.
HistogramTable marginal_histogram(const SampleSet& samples, Index node, int bins,
                                  double gauss_variance);

}  // namespace ratefield
