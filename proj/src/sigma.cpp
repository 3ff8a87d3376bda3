#include "ratefield/sigma.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "batch_stats.hpp"

namespace ratefield {

namespace {

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& log_ev) {
  if (!log_ev.allFinite())
    throw NumericalFailure("sigma_posterior: non-finite log evidence in the scan");
  const double mx = log_ev.maxCoeff();
  Eigen::VectorXd w = (log_ev.array() - mx).exp();
  const double total = w.sum();
  if (!(total > 0.0))
    throw NumericalFailure("sigma_posterior: all evidences vanished");
  return w / total;
}

}  // namespace

double SigmaScan::map_sigma() const {
  Index best = 0;
  weights.maxCoeff(&best);
  return sigma_grid[best];
}

double SigmaScan::mean_sigma() const { return weights.dot(sigma_grid); }

std::pair<double, double> SigmaScan::credible_interval(double mass) const {
  const double tail = 0.5 * (1.0 - mass);
  double acc = 0.0;
  double lo = sigma_grid[0], hi = sigma_grid[sigma_grid.size() - 1];
  for (Index k = 0; k < weights.size(); ++k) {
    const double next = acc + weights[k];
    if (acc <= tail) lo = sigma_grid[k];
    if (next < 1.0 - tail) {
      hi = sigma_grid[std::min(k + 1, weights.size() - 1)];
    }
    acc = next;
  }
  return {lo, std::max(hi, lo)};
}

double log_evidence(double sigma, const SpikeTrain& spikes, const TimeGrid& grid,
                    const SolverOptions& opts) {
  const ModelParams params{sigma};
  const MLResult ml = solve_ml(spikes, params, grid, opts);
  const double v = potential_value(ml.path, spikes, params, /*include_sigma_norm=*/true);
  const SymTridiagd hess = potential_hessian(ml.path, spikes, params);
  const double logdet = hess.factorize().log_determinant();
  const double n = static_cast<double>(grid.nodes());
  return 0.5 * n * std::log(2.0 * M_PI) - 0.5 * logdet - v;
}

double log_evidence_indirect(double sigma, const IndirectData& data,
                             const SolverOptions& opts) {
  const ModelParams params{sigma};
  const IndirectMLResult ml = solve_ml_indirect(data, params, opts);
  IndirectEval eval = total_potential_and_gradient(ml.path, data, params,
                                                   /*with_hessian=*/true,
                                                   /*include_sigma_norm=*/true);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(*eval.hessian);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    throw NumericalFailure("log_evidence_indirect: Hessian not positive definite at s*");
  const double logdet = ldlt.vectorD().array().log().sum();
  const double n = static_cast<double>(data.grid.nodes());
  return 0.5 * n * std::log(2.0 * M_PI) - 0.5 * logdet - eval.value;
}

SigmaScan sigma_posterior(const Eigen::VectorXd& sigma_grid, const SpikeTrain& spikes,
                          const TimeGrid& grid, const SolverOptions& opts) {
  if (sigma_grid.size() < 1) throw InvalidArgument("sigma_posterior: empty grid");
  SigmaScan scan;
  scan.sigma_grid = sigma_grid;
  scan.log_evidence.resize(sigma_grid.size());
  for (Index k = 0; k < sigma_grid.size(); ++k)
    scan.log_evidence[k] = log_evidence(sigma_grid[k], spikes, grid, opts);
  scan.weights = normalize_weights(scan.log_evidence);
  return scan;
}

SigmaScan sigma_posterior_indirect(const Eigen::VectorXd& sigma_grid,
                                   const IndirectData& data, const SolverOptions& opts) {
  if (sigma_grid.size() < 1) throw InvalidArgument("sigma_posterior: empty grid");
  SigmaScan scan;
  scan.sigma_grid = sigma_grid;
  scan.log_evidence.resize(sigma_grid.size());
  for (Index k = 0; k < sigma_grid.size(); ++k)
    scan.log_evidence[k] = log_evidence_indirect(sigma_grid[k], data, opts);
  scan.weights = normalize_weights(scan.log_evidence);
  return scan;
}

Eigen::VectorXd default_sigma_grid() {
  const Index n = 16;
  Eigen::VectorXd g(n);
  const double lo = std::log(0.01), hi = std::log(1.0);
  for (Index k = 0; k < n; ++k)
    g[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) /
                             static_cast<double>(n - 1));
  return g;
}

SampleSet mixed_posterior(const SigmaScan& scan, const std::vector<SampleSet>& per_sigma,
                          RngSeed seed) {
  if (static_cast<Index>(per_sigma.size()) != scan.sigma_grid.size())
    throw InvalidArgument("mixed_posterior: one SampleSet per sigma grid point required");
  if (per_sigma.empty()) throw InvalidArgument("mixed_posterior: empty input");
  for (const auto& s : per_sigma)
    if (s.tracked_nodes != per_sigma.front().tracked_nodes)
      throw InvalidArgument("mixed_posterior: sample sets track different nodes");

  // resample with the scan weights
  Index total = 0;
  for (const auto& s : per_sigma) total += s.marginals.rows();
  total = std::min<Index>(total, 4 * per_sigma.front().marginals.rows());

  const bool with_paths =
      per_sigma.front().paths.size() > 0 &&
      std::all_of(per_sigma.begin(), per_sigma.end(),
                  [&](const SampleSet& s) { return s.paths.size() > 0; });

  SampleSet out;
  out.tracked_nodes = per_sigma.front().tracked_nodes;
  out.n_chains = 1;
  out.samples_per_chain = total;
  out.du = per_sigma.front().du;
  out.marginals.resize(total, per_sigma.front().marginals.cols());
  if (with_paths) out.paths.resize(total, per_sigma.front().paths.cols());

  Rng rng(seed);
  Eigen::VectorXd cdf(scan.weights.size());
  double acc = 0.0;
  for (Index k = 0; k < scan.weights.size(); ++k) {
    acc += scan.weights[k];
    cdf[k] = acc;
  }
  for (Index r = 0; r < total; ++r) {
    const double u = rng.uniform();
    Index comp = 0;
    while (comp < cdf.size() - 1 && u > cdf[comp]) ++comp;
    const SampleSet& src = per_sigma[comp];
    const Index row = static_cast<Index>(rng.uniform() * static_cast<double>(
                                             src.marginals.rows()));
    const Index safe = std::min<Index>(row, src.marginals.rows() - 1);
    out.marginals.row(r) = src.marginals.row(safe);
    if (with_paths) out.paths.row(r) = src.paths.row(safe);
  }

  out.ess.resize(out.tracked_nodes.size());
  out.exp_x_mean.resize(out.tracked_nodes.size());
  out.exp_x_se.resize(out.tracked_nodes.size());
  for (Index k = 0; k < static_cast<Index>(out.tracked_nodes.size()); ++k) {
    out.ess[k] = detail::batch_means(out.marginals.col(k), 1).ess;
    const detail::BatchSummary fx =
        detail::batch_means(out.marginals.col(k).array().exp().matrix(), 1);
    out.exp_x_mean[k] = fx.value;
    out.exp_x_se[k] = fx.se;
  }
  return out;
}

}  // namespace ratefield
