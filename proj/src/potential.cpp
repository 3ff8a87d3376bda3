#include "ratefield/potential.hpp"

#include <cmath>

namespace ratefield {

namespace {

void check_params(const ModelParams& p) {
  if (!(p.sigma > 0.0)) throw InvalidArgument("ModelParams: sigma must be positive");
}

}  // namespace

double sigma_norm(const ModelParams& params, const TimeGrid& grid) {
  check_params(params);
  const double T = grid.t_end();
  return (T / grid.dt()) * std::log(params.sigma) + params.sigma * params.sigma * T / 8.0;
}

double potential_value(const LogRatePath& path, const SpikeTrain& spikes,
                       const ModelParams& params, bool include_sigma_norm) {
  check_params(params);
  const TimeGrid& grid = path.grid();
  const Eigen::VectorXd& s = path.values();
  const Eigen::VectorXi counts = bin_events(spikes, grid);
  const Eigen::VectorXd w = grid.trapezoid_weights();
  const double dt = grid.dt();
  const double inv = 1.0 / (2.0 * params.sigma * params.sigma * dt);

  double v = 0.5 * (s[s.size() - 1] - s[0]) + inv * quadratic_variation(path);
  v -= counts.cast<double>().dot(s);
  v += dt * (w.array() * s.array().exp()).sum();
  if (include_sigma_norm) v += sigma_norm(params, grid);
  return v;
}

Eigen::VectorXd potential_gradient(const LogRatePath& path, const SpikeTrain& spikes,
                                   const ModelParams& params) {
  check_params(params);
  const TimeGrid& grid = path.grid();
  const Eigen::VectorXd& s = path.values();
  const Eigen::VectorXi counts = bin_events(spikes, grid);
  const Eigen::VectorXd w = grid.trapezoid_weights();
  const Index n = s.size() - 1;
  const double dt = grid.dt();
  const double a = 1.0 / (params.sigma * params.sigma * dt);

  Eigen::VectorXd g(n + 1);
  g[0] = a * (s[0] - s[1]) - 0.5;
  for (Index j = 1; j < n; ++j) g[j] = a * (2.0 * s[j] - s[j - 1] - s[j + 1]);
  g[n] = a * (s[n] - s[n - 1]) + 0.5;
  g -= counts.cast<double>();
  g += dt * (w.array() * s.array().exp()).matrix();
  return g;
}

SymTridiagd potential_hessian(const LogRatePath& path, const SpikeTrain& spikes,
                              const ModelParams& params) {
  check_params(params);
  const TimeGrid& grid = path.grid();
  const Eigen::VectorXd& s = path.values();
  const Eigen::VectorXd w = grid.trapezoid_weights();
  const Index n = s.size() - 1;
  const double dt = grid.dt();
  const double a = 1.0 / (params.sigma * params.sigma * dt);

  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n + 1, 2.0 * a);
  diag[0] = a;
  diag[n] = a;
  diag += dt * (w.array() * s.array().exp()).matrix();
  Eigen::VectorXd off = Eigen::VectorXd::Constant(n, -a);
  (void)bin_events(spikes, grid);  // grid-compatibility check; counts drop out
  return SymTridiagd(std::move(diag), std::move(off));
}

PotentialEval potential_eval(const LogRatePath& path, const SpikeTrain& spikes,
                             const ModelParams& params, bool include_sigma_norm) {
  PotentialEval out;
  out.value = potential_value(path, spikes, params, include_sigma_norm);
  out.gradient = potential_gradient(path, spikes, params);
  out.hessian = potential_hessian(path, spikes, params);
  return out;
}

double prior_value(const LogRatePath& path, const ModelParams& params,
                   bool include_sigma_norm) {
  check_params(params);
  const Eigen::VectorXd& s = path.values();
  const double inv = 1.0 / (2.0 * params.sigma * params.sigma * path.grid().dt());
  double v = 0.5 * (s[s.size() - 1] - s[0]) + inv * quadratic_variation(path);
  if (include_sigma_norm) v += sigma_norm(params, path.grid());
  return v;
}

Eigen::VectorXd prior_gradient(const LogRatePath& path, const ModelParams& params) {
  check_params(params);
  const Eigen::VectorXd& s = path.values();
  const Index n = s.size() - 1;
  const double a = 1.0 / (params.sigma * params.sigma * path.grid().dt());
  Eigen::VectorXd g(n + 1);
  g[0] = a * (s[0] - s[1]) - 0.5;
  for (Index j = 1; j < n; ++j) g[j] = a * (2.0 * s[j] - s[j - 1] - s[j + 1]);
  g[n] = a * (s[n] - s[n - 1]) + 0.5;
  return g;
}

SymTridiagd prior_hessian(const TimeGrid& grid, const ModelParams& params) {
  check_params(params);
  const Index n = grid.nodes() - 1;
  const double a = 1.0 / (params.sigma * params.sigma * grid.dt());
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n + 1, 2.0 * a);
  diag[0] = a;
  diag[n] = a;
  Eigen::VectorXd off = Eigen::VectorXd::Constant(n, -a);
  return SymTridiagd(std::move(diag), std::move(off));
}

}  // namespace ratefield
