#include "ratefield/ml_solver.hpp"

#include <cmath>
#include <string>

namespace ratefield {

namespace {

double trapezoid_rate_integral(const LogRatePath& path) {
  const TimeGrid& grid = path.grid();
  return grid.dt() *
         (grid.trapezoid_weights().array() * path.values().array().exp()).sum();
}

}  // namespace

MLResult solve_ml_from(const LogRatePath& start, const SpikeTrain& spikes,
                       const ModelParams& params, const SolverOptions& opts) {
  const TimeGrid& grid = start.grid();
  const Index m = spikes.count();
  if (m < 1)
    throw NoSolution(
        "solve_ml: empty spike train; the compatibility condition "
        "m = integral exp(s) excludes a finite solution for m = 0");
  if (!(opts.damping > 0.0 && opts.damping < 1.0))
    throw InvalidArgument("SolverOptions: damping must lie in (0, 1)");
  const double tol =
      opts.tol_grad > 0.0 ? opts.tol_grad : 1e-10 * (1.0 + static_cast<double>(m));

  LogRatePath path = start;
  MLResult res{path, 0, 0.0, 0.0, false, {}};
  double value = potential_value(path, spikes, params);
  res.value_history.push_back(value);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd grad = potential_gradient(path, spikes, params);
    res.final_grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (res.final_grad_norm <= tol) {
      res.converged = true;
      break;
    }
    const SymTridiagd hess = potential_hessian(path, spikes, params);
    const Eigen::VectorXd step = hess.factorize().solve(-grad);
    const double slope = grad.dot(step);  // negative by convexity

    double t = 1.0;
    bool accepted = false;
    while (t >= 1e-14) {
      LogRatePath trial(grid, path.values() + t * step);
      const double trial_value = potential_value(trial, spikes, params);
      if (trial_value <= value + opts.armijo_c * t * slope) {
        path = std::move(trial);
        value = trial_value;
        accepted = true;
        break;
      }
      t *= opts.damping;
    }
    if (!accepted)
      throw NonConvergence("solve_ml: backtracking line search stalled at iteration " +
                           std::to_string(iter));
    res.iterations = iter + 1;
    res.value_history.push_back(value);
  }
  if (!res.converged)
    throw NonConvergence("solve_ml: gradient norm " + std::to_string(res.final_grad_norm) +
                         " above tolerance " + std::to_string(tol) + " after " +
                         std::to_string(opts.max_iter) + " iterations");
  res.path = path;
  res.compatibility_residual =
      static_cast<double>(m) - trapezoid_rate_integral(path);
  return res;
}

MLResult solve_ml(const SpikeTrain& spikes, const ModelParams& params,
                  const TimeGrid& grid, const SolverOptions& opts) {
  const Index m = spikes.count();
  if (m < 1)
    throw NoSolution(
        "solve_ml: empty spike train; the compatibility condition "
        "m = integral exp(s) excludes a finite solution for m = 0");
  const double c0 = std::log(static_cast<double>(m) / grid.t_end());
  LogRatePath start(grid, Eigen::VectorXd::Constant(grid.nodes(), c0));
  return solve_ml_from(start, spikes, params, opts);
}

double compatibility_check(const MLResult& result, const SpikeTrain& spikes) {
  return static_cast<double>(spikes.count()) - trapezoid_rate_integral(result.path);
}

}  // namespace ratefield
