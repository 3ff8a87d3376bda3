#include "ratefield/spde_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ratefield/errors.hpp"
#include "ratefield/tridiag.hpp"

#include "batch_stats.hpp"

namespace ratefield {

namespace {

struct StepPlan {
  Eigen::VectorXd alpha_eff;   // w_j * coefficient_j
  SymTridiagd m_minus;         // I - theta du D
  Eigen::VectorXd plus_diag;   // I + (1-theta) du D, diagonal
  double plus_off = 0.0;       // and off diagonal (constant)
  double du = 0.0;
  double noise_scale = 0.0;
  bool nonlinear = false;
  bool reaction_implicit = false;
  double theta = 0.5;
  Index burn_steps = 0, thin_steps = 1;
};

StepPlan make_plan(const LogRatePath& s_star, const ModelParams& params,
                   const SamplerOptions& opts) {
  const TimeGrid& grid = s_star.grid();
  const Index n = grid.nodes();
  const double dt = grid.dt();
  const double inv_s2dt2 = 1.0 / (params.sigma * params.sigma * dt * dt);

  Eigen::VectorXd coef(n);
  switch (opts.drift_mode) {
    case DriftMode::FullNonlinear:
    case DriftMode::Linearized:
      coef = s_star.values().array().exp();
      break;
    case DriftMode::FlatCoefficient: {
      const double alpha =
          opts.flat_alpha > 0.0 ? opts.flat_alpha : std::exp(s_star[n / 2]);
      coef.setConstant(alpha);
      break;
    }
  }
  StepPlan plan;
  plan.alpha_eff = grid.trapezoid_weights().cwiseProduct(coef);
  plan.nonlinear = opts.drift_mode != DriftMode::Linearized;
  plan.reaction_implicit = opts.reaction_implicit && plan.nonlinear;
  plan.theta = opts.theta;

  const double amax = plan.alpha_eff.maxCoeff();
  const double amin = coef.minCoeff();
  plan.du = opts.du > 0.0 ? opts.du : 0.1 / amax;
  if (plan.nonlinear && !opts.reaction_implicit && plan.du > 0.2 / amax)
    throw InvalidArgument(
        "sample: du exceeds the explicit reaction guard 0.2 / max(exp(s*)) = " +
        std::to_string(0.2 / amax));
  const double burn = opts.burn_in >= 0.0 ? opts.burn_in : 20.0 / amin;
  const double thin = opts.thinning > 0.0 ? opts.thinning : 1.0 / amin;
  plan.burn_steps = static_cast<Index>(std::ceil(burn / plan.du));
  plan.thin_steps = std::max<Index>(1, static_cast<Index>(std::llround(thin / plan.du)));
  plan.noise_scale = std::sqrt(2.0 * plan.du / dt);

  // D = Lap / (sigma^2 dt^2) - diag(alpha_eff), reflected ends
  Eigen::VectorXd lap_diag = Eigen::VectorXd::Constant(n, 2.0 * inv_s2dt2);
  lap_diag[0] = inv_s2dt2;
  lap_diag[n - 1] = inv_s2dt2;
  Eigen::VectorXd d_diag = -lap_diag - plan.alpha_eff;

  Eigen::VectorXd m_diag = Eigen::VectorXd::Ones(n) - plan.theta * plan.du * d_diag;
  Eigen::VectorXd m_off =
      Eigen::VectorXd::Constant(n - 1, -plan.theta * plan.du * inv_s2dt2);
  plan.m_minus = SymTridiagd(std::move(m_diag), std::move(m_off));
  plan.plus_diag = Eigen::VectorXd::Ones(n) + (1.0 - plan.theta) * plan.du * d_diag;
  plan.plus_off = (1.0 - plan.theta) * plan.du * inv_s2dt2;
  return plan;
}

// fluctuation potential of the sampled dynamics (matches V(s* + x) - V(s*)
// in full-nonlinear mode); used for the stationarity trace
double fluctuation_potential(const Eigen::VectorXd& x, const StepPlan& plan,
                             const ModelParams& params, double dt) {
  const Index n = x.size();
  const double quad_scale = 1.0 / (2.0 * params.sigma * params.sigma * dt);
  double v = quad_scale * quadratic_variation_of(x);
  if (plan.nonlinear) {
    for (Index j = 0; j < n; ++j)
      v += dt * plan.alpha_eff[j] * (std::exp(x[j]) - 1.0 - x[j]);
  } else {
    v += 0.5 * dt * plan.alpha_eff.dot(x.cwiseProduct(x));
  }
  return v;
}

struct ChainOutput {
  Eigen::MatrixXd marginals;
  Eigen::MatrixXd paths;
  std::vector<double> v_trace;
};

void run_chain(const StepPlan& plan, const ModelParams& params, double dt,
               const std::vector<Index>& tracked, Index n_retain, bool keep_paths,
               RngSeed seed, double blowup, ChainOutput& out) {
  const Index n = plan.alpha_eff.size();
  Rng rng(seed);
  const SymTridiagd::Factor factor = plan.m_minus.factorize();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd rhs(n), react(n);
  out.marginals.resize(n_retain, static_cast<Index>(tracked.size()));
  if (keep_paths) out.paths.resize(n_retain, n);
  out.v_trace.reserve(n_retain);

  const auto remainder = [&](const Eigen::VectorXd& y) {
    return (-plan.alpha_eff.array() * (y.array().exp() - 1.0 - y.array())).matrix();
  };

  const auto step = [&]() {
    // rhs = (I + (1-theta) du D) x + du * remainder + noise
    rhs = plan.plus_diag.cwiseProduct(x);
    rhs.head(n - 1) += plan.plus_off * x.tail(n - 1);
    rhs.tail(n - 1) += plan.plus_off * x.head(n - 1);
    if (plan.nonlinear) {
      react = remainder(x);
      rhs += plan.du * react;
    }
    for (Index j = 0; j < n; ++j) rhs[j] += plan.noise_scale * rng.normal();
    if (!plan.reaction_implicit) {
      x = factor.solve(rhs);
    } else {
      // theta-implicit reaction: one Newton sub-iteration from the explicit
      // predictor on F(xn) = M_minus xn - theta du g(xn) - b = 0
      const double th = plan.theta * plan.du;
      const Eigen::VectorXd b = rhs - th * react;  // (1-theta)-weighted remainder
      Eigen::VectorXd xp = factor.solve(rhs);
      const Eigen::VectorXd res =
          plan.m_minus.apply(xp) - th * remainder(xp) - b;
      Eigen::VectorXd jac_diag =
          plan.m_minus.diagonal() +
          th * (plan.alpha_eff.array() * (xp.array().exp() - 1.0)).matrix();
      SymTridiagd jac(std::move(jac_diag), plan.m_minus.off_diagonal());
      x = xp - jac.factorize().solve(res);
    }
    if (x.cwiseAbs().maxCoeff() > blowup)
      throw Instability("sample: |x| exceeded " + std::to_string(blowup) +
                        "; reduce du or check s*");
  };

  for (Index k = 0; k < plan.burn_steps; ++k) step();
  for (Index r = 0; r < n_retain; ++r) {
    for (Index k = 0; k < plan.thin_steps; ++k) step();
    for (Index c = 0; c < static_cast<Index>(tracked.size()); ++c)
      out.marginals(r, c) = x[tracked[c]];
    if (keep_paths) out.paths.row(r) = x.transpose();
    out.v_trace.push_back(fluctuation_potential(x, plan, params, dt));
  }
}

}  // namespace

Index SampleSet::column_of(Index node) const {
  for (Index c = 0; c < static_cast<Index>(tracked_nodes.size()); ++c)
    if (tracked_nodes[c] == node) return c;
  throw InvalidArgument("SampleSet: node " + std::to_string(node) +
                        " was not tracked by the sampler");
}

SampleSet sample(const LogRatePath& s_star, const ModelParams& params,
                 const SamplerOptions& opts) {
  if (!(params.sigma > 0.0)) throw InvalidArgument("sample: sigma must be positive");
  if (opts.n_chains < 1) throw InvalidArgument("sample: n_chains must be >= 1");
  if (!(opts.theta >= 0.0 && opts.theta <= 1.0))
    throw InvalidArgument("sample: theta must lie in [0, 1]");
  const TimeGrid& grid = s_star.grid();
  const StepPlan plan = make_plan(s_star, params, opts);

  std::vector<Index> tracked = opts.track_nodes;
  if (tracked.empty()) tracked.push_back(grid.nodes() / 2);
  for (Index t : tracked)
    if (t < 0 || t >= grid.nodes())
      throw InvalidArgument("sample: tracked node outside grid");

  const int chains = opts.n_chains;
  const Index per_chain =
      (opts.n_samples + chains - 1) / static_cast<Index>(chains);

  std::vector<ChainOutput> outs(chains);
  std::vector<std::exception_ptr> errors(chains);
  const double dt = grid.dt();
  auto worker = [&](int c) {
    try {
      run_chain(plan, params, dt, tracked, per_chain, opts.keep_paths,
                substream(opts.seed, 0x9e3779b9u + static_cast<std::uint64_t>(c)),
                opts.blowup_threshold, outs[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (chains == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(chains);
    for (int c = 0; c < chains; ++c) threads.emplace_back(worker, c);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SampleSet set;
  set.tracked_nodes = tracked;
  set.du = plan.du;
  set.burn_in = static_cast<double>(plan.burn_steps) * plan.du;
  set.thinning = static_cast<double>(plan.thin_steps) * plan.du;
  set.n_chains = chains;
  set.samples_per_chain = per_chain;
  const Index total = per_chain * chains;
  set.marginals.resize(total, static_cast<Index>(tracked.size()));
  if (opts.keep_paths) set.paths.resize(total, grid.nodes());
  for (int c = 0; c < chains; ++c) {
    set.marginals.middleRows(c * per_chain, per_chain) = outs[c].marginals;
    if (opts.keep_paths) set.paths.middleRows(c * per_chain, per_chain) = outs[c].paths;
    set.v_trace.insert(set.v_trace.end(), outs[c].v_trace.begin(),
                       outs[c].v_trace.end());
  }

  const Index ncols = static_cast<Index>(tracked.size());
  set.ess.resize(ncols);
  set.exp_x_mean.resize(ncols);
  set.exp_x_se.resize(ncols);
  for (Index c = 0; c < ncols; ++c) {
    const Eigen::VectorXd col = set.marginals.col(c);
    set.ess[c] = detail::batch_means(col, chains).ess;
    const detail::BatchSummary fx = detail::batch_means(col.array().exp().matrix(), chains);
    set.exp_x_mean[c] = fx.value;
    set.exp_x_se[c] = fx.se;
  }
  return set;
}

MomentSet moment_estimates(const SampleSet& samples, Index node) {
  const Index c = samples.column_of(node);
  const Eigen::VectorXd x = samples.marginals.col(c);
  const Index n = x.size();
  if (samples.ess[c] < 100.0) {
    const double needed =
        100.0 / std::max(samples.ess[c], 1.0) * static_cast<double>(n);
    throw StatisticsError(
        "moment_estimates: effective sample size " + std::to_string(samples.ess[c]) +
            " below 100 at node " + std::to_string(node) + "; run about " +
            std::to_string(static_cast<long>(needed)) + " retained samples",
        needed);
  }
  const double mu = x.mean();

  const detail::BatchSummary m1 = detail::batch_means(x, samples.n_chains);
  // variance batches centered on the global mean so slow drift shows up in se
  const Eigen::VectorXd v_h =
      (x.array() - mu).square().matrix();
  const detail::BatchSummary m2 = detail::batch_means(v_h, samples.n_chains);
  const detail::BatchSummary m3 = detail::batch_means(x.array().cube().matrix(), samples.n_chains);
  const detail::BatchSummary m4 = detail::batch_means(x.array().pow(4).matrix(), samples.n_chains);

  MomentSet out;
  out.mean = m1.value;
  out.se_mean = m1.se;
  out.variance = m2.value * static_cast<double>(n) / static_cast<double>(n - 1);
  out.se_variance = m2.se;
  out.third_raw = m3.value;
  out.se_third = m3.se;
  out.fourth_raw = m4.value;
  out.se_fourth = m4.se;
  return out;
}

HistogramTable marginal_histogram(const SampleSet& samples, Index node, int bins,
                                  double gauss_variance) {
  if (bins < 4) throw InvalidArgument("marginal_histogram: need at least 4 bins");
  if (!(gauss_variance > 0.0))
    throw InvalidArgument("marginal_histogram: gauss_variance must be positive");
  const Index c = samples.column_of(node);
  const Eigen::VectorXd x = samples.marginals.col(c);
  const Index n = x.size();
  const double mu = x.mean();
  const double sd = std::sqrt((x.array() - mu).square().sum() /
                              static_cast<double>(n - 1));
  const double lo = mu - 4.5 * sd, hi = mu + 4.5 * sd;
  const double width = (hi - lo) / bins;

  HistogramTable h;
  h.bin_width = width;
  h.centers.resize(bins);
  h.density.resize(bins);
  h.se.resize(bins);
  h.gauss_ref.resize(bins);
  const double gsd = std::sqrt(gauss_variance);
  for (int b = 0; b < bins; ++b) {
    const double a = lo + b * width, bb = a + width;
    h.centers[b] = 0.5 * (a + bb);
    // bin-averaged Gaussian companion
    h.gauss_ref[b] =
        (std::erf(bb / (std::sqrt(2.0) * gsd)) - std::erf(a / (std::sqrt(2.0) * gsd))) /
        (2.0 * width);
  }
  for (int b = 0; b < bins; ++b) {
    Eigen::VectorXd ind(n);
    const double a = lo + b * width, bb = a + width;
    for (Index k = 0; k < n; ++k) ind[k] = (x[k] >= a && x[k] < bb) ? 1.0 : 0.0;
    const detail::BatchSummary s = detail::batch_means(ind, samples.n_chains);
    h.density[b] = s.value / width;
    h.se[b] = s.se / width;
  }
  return h;
}

}  // namespace ratefield
