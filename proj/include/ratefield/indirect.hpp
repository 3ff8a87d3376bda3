#pragma once

#include <optional>
#include <vector>

#include "ratefield/ml_solver.hpp"
#include "ratefield/spde_sampler.hpp"
#include "ratefield/synth.hpp"

namespace ratefield {

// Mention-pair data for the survival-likelihood model. The mention rate
// lambda is a known input in rate units (>= 0 per node), not inferred.
struct IndirectData {
  std::vector<MentionRecord> records;
  Eigen::VectorXd lambda;  // per-node mention rate
  TimeGrid grid;

  IndirectData(std::vector<MentionRecord> recs, Eigen::VectorXd lambda_values,
               TimeGrid g);
};

// Prefix-sum survival kernels for one rate path r = exp(s):
//   S_{a,b} = exp(-int_a^b r),  Q_{a,b} = exp(-int_a^b lambda),  A = S Q,
// with trapezoid integrals between grid nodes a <= b.
struct SurvivalKernels {
  TimeGrid grid;
  Eigen::VectorXd rate;     // r per node
  Eigen::VectorXd cum_r;    // trapezoid prefix of r dt
  Eigen::VectorXd cum_l;    // trapezoid prefix of lambda dt

  double S(Index a, Index b) const { return std::exp(-(cum_r[b] - cum_r[a])); }
  double Q(Index a, Index b) const { return std::exp(-(cum_l[b] - cum_l[a])); }
  double A(Index a, Index b) const {
    return std::exp(-(cum_r[b] - cum_r[a]) - (cum_l[b] - cum_l[a]));
  }
};

SurvivalKernels build_kernels(const LogRatePath& s, const IndirectData& data);

// B_{i,f} = int_f^T dt r_t A_{i,t} + A_{i,T} on the grid (times snapped to
// nearest nodes). Decreasing in f; B in (0, 1].
double b_integral(double i, double f, const SurvivalKernels& kernels);

// Per-record potential V_{i,f} = ln(1 - B_{i,i}) - ln B_{i,f}.
double record_potential(const MentionRecord& record, const SurvivalKernels& kernels);

struct IndirectEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  std::optional<Eigen::MatrixXd> hessian;  // dense, only on request
};

// Prior (Eq.-(1)-type terms) plus the summed record potentials, with the
// analytic gradient; the dense Hessian is assembled only when requested
// (sigma inference needs its log-determinant).
IndirectEval total_potential_and_gradient(const LogRatePath& s, const IndirectData& data,
                                          const ModelParams& params,
                                          bool with_hessian = false,
                                          bool include_sigma_norm = false);

struct IndirectMLResult {
  LogRatePath path;
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  double multistart_disagreement = 0.0;  // max-norm gap between two starts
};

// Damped Newton on the indirect potential (dense solves, Levenberg shift if a
// factorization fails). Convexity is not guaranteed here, so the result
// reports the disagreement between two different starting points instead of
// asserting uniqueness.
IndirectMLResult solve_ml_indirect(const IndirectData& data, const ModelParams& params,
                                   const SolverOptions& opts = {});

// Full-path Langevin sampling of exp(-V) with this module's gradient: the
// prior diffusion is stepped theta-implicitly, the (nonlocal) likelihood
// gradient explicitly. Returns absolute paths s, not fluctuations.
SampleSet sample_indirect(const IndirectData& data, const ModelParams& params,
                          const SamplerOptions& opts);

}  // namespace ratefield
