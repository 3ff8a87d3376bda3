#include "ratefield/indirect.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Cholesky>

#include "batch_stats.hpp"

namespace ratefield {

namespace {

Eigen::VectorXd trapezoid_prefix(const Eigen::VectorXd& values, double dt) {
  Eigen::VectorXd out(values.size());
  out[0] = 0.0;
  for (Index j = 1; j < values.size(); ++j)
    out[j] = out[j - 1] + 0.5 * dt * (values[j - 1] + values[j]);
  return out;
}

struct RecordNodes {
  Index a, b;
};

RecordNodes record_nodes(const MentionRecord& rec, const TimeGrid& grid) {
  if (!(rec.i >= 0.0 && rec.i <= rec.f && rec.f <= grid.t_end()))
    throw InvalidArgument("MentionRecord: need 0 <= i <= f <= t_end");
  Index a = grid.nearest_node(rec.i);
  Index b = grid.nearest_node(rec.f);
  if (b < a) b = a;
  return {a, b};
}

// Everything one record contributes: the two B objects (lower limits b and a),
// their gradients, and optionally their Hessians. Work arrays live in the
// caller so repeated records reuse the allocations.
struct RecordWork {
  Eigen::VectorXd avals;   // A(a, t)
  Eigen::VectorXd g;       // r_t A(a, t)
  Eigen::VectorXd suffix;  // suffix trapezoid sums for the current lower limit
  Eigen::VectorXd db;      // gradient of the current B object
};

// kappa weight of node t in the trapezoid integral over [c, n]
inline double kappa(Index t, Index c, Index n, double dt) {
  if (t < c || c >= n) return 0.0;
  return (t == c || t == n) ? 0.5 * dt : dt;
}

// B(a, c) plus its gradient in work.db. Expects work.avals/g filled for [a..n].
double b_object(Index a, Index c, Index n, double dt, const Eigen::VectorXd& r,
                RecordWork& work, bool with_gradient) {
  const Eigen::VectorXd& g = work.g;
  const double a_an = work.avals[n];

  // suffix[x] = sum_{t >= max(x,c)} kappa_t g_t (zero if c == n)
  double value = a_an;
  if (c < n) {
    work.suffix.setZero();
    double acc = 0.0;
    for (Index t = n; t >= c; --t) {
      acc += kappa(t, c, n, dt) * g[t];
      work.suffix[t] = acc;
    }
    for (Index t = c - 1; t >= a; --t) work.suffix[t] = acc;
    value += acc;
  }
  if (!with_gradient) return value;

  work.db.setZero();
  for (Index u = a; u <= n; ++u) {
    double d = 0.0;
    // d(r_u)/ds_u inside the integral
    if (c < n && u >= c) d += kappa(u, c, n, dt) * g[u];
    // chain through A(a, t) inside the integral
    if (c < n) {
      const Index x = std::max(c, u);
      double nu_sum = work.suffix[x];
      if (u > a) {
        if (u >= c) nu_sum -= 0.5 * kappa(u, c, n, dt) * g[u];  // t == u edge
        d -= r[u] * dt * nu_sum;
      } else {  // u == a: half weight throughout, drop any t == a term
        if (c == a) nu_sum -= kappa(a, c, n, dt) * g[a];
        d -= r[u] * 0.5 * dt * nu_sum;
      }
    }
    // chain through the A(a, n) tail term
    if (n > a) {
      const double nu = (u == a || u == n) ? 0.5 : 1.0;
      d -= a_an * r[u] * dt * nu;
    }
    work.db[u] = d;
  }
  return value;
}

// Dense Hessian of B(a, c) accumulated into hess with the given prefactor.
// Same decomposition as b_object, differentiated once more.
void b_object_hessian(Index a, Index c, Index n, double dt, const Eigen::VectorXd& r,
                      const RecordWork& work, double prefactor,
                      Eigen::MatrixXd& hess) {
  const Eigen::VectorXd& g = work.g;
  const double a_an = work.avals[n];
  const auto mu = [a](Index u) { return u == a ? 0.5 : 1.0; };
  const auto nu_n = [a, n](Index u) { return (u == a || u == n) ? 0.5 : 1.0; };

  // strict suffix sum_{t >= x, t > a} kappa_t g_t
  const auto suffix_strict = [&](Index x) {
    double v = work.suffix[std::max(x, a)];
    if (x <= a && c == a) v -= kappa(a, c, n, dt) * g[a];
    return v;
  };

  for (Index u = a; u <= n; ++u) {
    for (Index v = a; v <= n; ++v) {
      double h = 0.0;
      if (c < n) {
        // (delta_tu)(delta_tv) term
        if (u == v && u >= c) h += kappa(u, c, n, dt) * g[u];
        // -delta_tu h^(t)_v and its transpose
        if (u >= c && u > a && v <= u)
          h -= kappa(u, c, n, dt) * g[u] * r[v] * dt *
               ((v == a || v == u) ? 0.5 : 1.0);
        if (v >= c && v > a && u <= v)
          h -= kappa(v, c, n, dt) * g[v] * r[u] * dt *
               ((u == a || u == v) ? 0.5 : 1.0);
        // sum_t kappa g h^(t)_u h^(t)_v expanded around nu = mu - delta/2
        const Index x = std::max({c, u, v});
        double hh = mu(u) * mu(v) * suffix_strict(x);
        if (v >= std::max(c, u) && v > a) hh -= 0.5 * mu(u) * kappa(v, c, n, dt) * g[v];
        if (u >= std::max(c, v) && u > a) hh -= 0.5 * mu(v) * kappa(u, c, n, dt) * g[u];
        if (u == v && u >= c && u > a) hh += 0.25 * kappa(u, c, n, dt) * g[u];
        h += r[u] * r[v] * dt * dt * hh;
        // -delta_uv sum_t kappa g h^(t)_u
        if (u == v) {
          double nu_sum = mu(u) * suffix_strict(std::max(c, u));
          if (u >= c && u > a) nu_sum -= 0.5 * kappa(u, c, n, dt) * g[u];
          h -= r[u] * dt * nu_sum;
        }
      }
      if (n > a) {
        h += a_an * r[u] * r[v] * dt * dt * nu_n(u) * nu_n(v);
        if (u == v) h -= a_an * r[u] * dt * nu_n(u);
      }
      hess(u, v) += prefactor * h;
    }
  }
}

struct LikelihoodEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

LikelihoodEval likelihood_eval(const Eigen::VectorXd& r, const Eigen::VectorXd& cum_rl,
                               const std::vector<RecordNodes>& nodes, double dt,
                               Index n, Eigen::MatrixXd* hess) {
  LikelihoodEval out;
  out.gradient = Eigen::VectorXd::Zero(n + 1);
  RecordWork work;
  work.avals.resize(n + 1);
  work.g.resize(n + 1);
  work.suffix.resize(n + 1);
  work.db.resize(n + 1);
  Eigen::VectorXd db_a(n + 1);

  for (const RecordNodes& rec : nodes) {
    const Index a = rec.a, b = rec.b;
    for (Index t = a; t <= n; ++t) {
      work.avals[t] = std::exp(-(cum_rl[t] - cum_rl[a]));
      work.g[t] = r[t] * work.avals[t];
    }
    const double B_ab = b_object(a, b, n, dt, r, work, true);
    if (!(B_ab > 0.0))
      throw NumericalFailure("record_potential: B_{i,f} underflowed to zero");
    const Eigen::VectorXd db_b = work.db;
    if (hess) b_object_hessian(a, b, n, dt, r, work, -1.0 / B_ab, *hess);

    const double B_aa = b_object(a, a, n, dt, r, work, true);
    if (!(B_aa < 1.0))
      throw NumericalFailure(
          "record_potential: B_{i,i} reached 1 (no mention mass after the first "
          "mention; lambda vanishes or the record sits at t_end)");
    db_a = work.db;
    if (hess) b_object_hessian(a, a, n, dt, r, work, -1.0 / (1.0 - B_aa), *hess);

    out.value += std::log1p(-B_aa) - std::log(B_ab);
    out.gradient -= db_a / (1.0 - B_aa);
    out.gradient -= db_b / B_ab;
    if (hess) {
      hess->noalias() -= db_a * db_a.transpose() / ((1.0 - B_aa) * (1.0 - B_aa));
      hess->noalias() += db_b * db_b.transpose() / (B_ab * B_ab);
    }
  }
  return out;
}

void check_data(const IndirectData& data) {
  if (data.lambda.size() != data.grid.nodes())
    throw InvalidArgument("IndirectData: lambda length must match grid nodes");
  if ((data.lambda.array() < 0.0).any())
    throw InvalidArgument("IndirectData: lambda must be nonnegative");
}

}  // namespace

IndirectData::IndirectData(std::vector<MentionRecord> recs, Eigen::VectorXd lambda_values,
                           TimeGrid g)
    : records(std::move(recs)), lambda(std::move(lambda_values)), grid(g) {
  check_data(*this);
  for (const auto& rec : records)
    if (!(rec.i >= 0.0 && rec.i <= rec.f && rec.f <= grid.t_end()))
      throw InvalidArgument("IndirectData: record violates 0 <= i <= f <= t_end");
}

SurvivalKernels build_kernels(const LogRatePath& s, const IndirectData& data) {
  require_same_grid(s.grid(), data.grid, "build_kernels");
  check_data(data);
  SurvivalKernels k{data.grid, s.rate().matrix(), {}, {}};
  k.cum_r = trapezoid_prefix(k.rate, data.grid.dt());
  k.cum_l = trapezoid_prefix(data.lambda, data.grid.dt());
  return k;
}

double b_integral(double i, double f, const SurvivalKernels& kernels) {
  if (!(i >= 0.0 && i <= f))
    throw InvalidArgument("b_integral: need 0 <= i <= f");
  if (f > kernels.grid.t_end())
    throw InvalidArgument("b_integral: f beyond t_end");
  const Index a = kernels.grid.nearest_node(i);
  Index b = kernels.grid.nearest_node(f);
  if (b < a) b = a;
  const Index n = kernels.grid.n_steps();
  const double dt = kernels.grid.dt();

  double value = kernels.A(a, n);
  for (Index t = b; t <= n && b < n; ++t)
    value += kappa(t, b, n, dt) * kernels.rate[t] * kernels.A(a, t);
  return value;
}

double record_potential(const MentionRecord& record, const SurvivalKernels& kernels) {
  const RecordNodes rn = record_nodes(record, kernels.grid);
  const double B_aa =
      b_integral(kernels.grid.time_at(rn.a), kernels.grid.time_at(rn.a), kernels);
  const double B_ab =
      b_integral(kernels.grid.time_at(rn.a), kernels.grid.time_at(rn.b), kernels);
  if (!(B_aa < 1.0))
    throw NumericalFailure("record_potential: B_{i,i} reached 1");
  if (!(B_ab > 0.0))
    throw NumericalFailure("record_potential: B_{i,f} underflowed to zero");
  return std::log1p(-B_aa) - std::log(B_ab);
}

IndirectEval total_potential_and_gradient(const LogRatePath& s, const IndirectData& data,
                                          const ModelParams& params, bool with_hessian,
                                          bool include_sigma_norm) {
  require_same_grid(s.grid(), data.grid, "total_potential_and_gradient");
  check_data(data);
  const TimeGrid& grid = data.grid;
  const Index n = grid.n_steps();
  const double dt = grid.dt();

  const Eigen::VectorXd r = s.rate().matrix();
  const Eigen::VectorXd cum_rl =
      trapezoid_prefix((r + data.lambda).eval(), dt);
  std::vector<RecordNodes> nodes;
  nodes.reserve(data.records.size());
  for (const auto& rec : data.records) nodes.push_back(record_nodes(rec, grid));

  IndirectEval out;
  Eigen::MatrixXd hess;
  if (with_hessian) hess = Eigen::MatrixXd::Zero(n + 1, n + 1);
  LikelihoodEval lik =
      likelihood_eval(r, cum_rl, nodes, dt, n, with_hessian ? &hess : nullptr);

  out.value = prior_value(s, params, include_sigma_norm) + lik.value;
  out.gradient = prior_gradient(s, params) + lik.gradient;
  if (with_hessian) {
    const SymTridiagd hp = prior_hessian(grid, params);
    hess.diagonal() += hp.diagonal();
    hess.diagonal(1) += hp.off_diagonal();
    hess.diagonal(-1) += hp.off_diagonal();
    out.hessian = std::move(hess);
  }
  return out;
}

IndirectMLResult solve_ml_indirect(const IndirectData& data, const ModelParams& params,
                                   const SolverOptions& opts) {
  check_data(data);
  const TimeGrid& grid = data.grid;
  const double N = static_cast<double>(data.records.size());
  if (N < 1.0) throw NoSolution("solve_ml_indirect: no records");

  // crude death-count guess: records whose last mention falls before 0.9 T
  double deaths = 0.0;
  for (const auto& rec : data.records)
    if (rec.f < 0.9 * grid.t_end()) deaths += 1.0;
  deaths = std::max(deaths, 1.0);
  const double c0 = std::log(deaths / (N * grid.t_end()));

  const double tol = opts.tol_grad > 0.0 ? opts.tol_grad : 1e-8 * (1.0 + N);

  const auto newton = [&](double start_level) {
    LogRatePath s(grid, Eigen::VectorXd::Constant(grid.nodes(), start_level));
    IndirectEval eval = total_potential_and_gradient(s, data, params, true);
    IndirectMLResult res{s, 0, 0.0, false, 0.0};
    for (int iter = 0; iter < opts.max_iter; ++iter) {
      res.final_grad_norm = eval.gradient.lpNorm<Eigen::Infinity>();
      if (res.final_grad_norm <= tol) {
        res.converged = true;
        break;
      }
      Eigen::MatrixXd H = *eval.hessian;
      Eigen::VectorXd step;
      double shift = 0.0;
      for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
          step = ldlt.solve(-eval.gradient);
          break;
        }
        shift = (shift == 0.0) ? 1e-6 * H.diagonal().maxCoeff() : 10.0 * shift;
        H = *eval.hessian;
        H.diagonal().array() += shift;
      }
      if (step.size() == 0)
        throw NonConvergence("solve_ml_indirect: could not stabilize the Hessian");
      const double slope = eval.gradient.dot(step);
      double t = 1.0;
      bool accepted = false;
      while (t >= 1e-12) {
        LogRatePath trial(grid, s.values() + t * step);
        IndirectEval trial_eval = total_potential_and_gradient(trial, data, params, true);
        if (trial_eval.value <= eval.value + opts.armijo_c * t * slope) {
          s = std::move(trial);
          eval = std::move(trial_eval);
          accepted = true;
          break;
        }
        t *= opts.damping;
      }
      if (!accepted)
        throw NonConvergence("solve_ml_indirect: line search stalled");
      res.iterations = iter + 1;
    }
    if (!res.converged)
      throw NonConvergence("solve_ml_indirect: gradient norm " +
                           std::to_string(res.final_grad_norm) + " above " +
                           std::to_string(tol));
    res.path = s;
    return res;
  };

  IndirectMLResult first = newton(c0);
  IndirectMLResult second = newton(c0 + 0.7);
  first.multistart_disagreement =
      (first.path.values() - second.path.values()).lpNorm<Eigen::Infinity>();
  return first;
}

SampleSet sample_indirect(const IndirectData& data, const ModelParams& params,
                          const SamplerOptions& opts) {
  check_data(data);
  const TimeGrid& grid = data.grid;
  const Index n = grid.n_steps();
  const double dt = grid.dt();

  const IndirectMLResult ml = solve_ml_indirect(data, params);
  const Eigen::VectorXd s_star = ml.path.values();

  // likelihood curvature at the mode sets the explicit-part step guard and
  // the slow relaxation rate for burn-in/thinning defaults
  IndirectEval eval0 = total_potential_and_gradient(ml.path, data, params, true);
  const SymTridiagd hp = prior_hessian(grid, params);
  Eigen::VectorXd lik_diag = eval0.hessian->diagonal() - hp.diagonal();
  const double l_max = std::max(lik_diag.maxCoeff() / dt, 1e-12);
  const double l_slow = std::max(
      eval0.hessian->sum() / (static_cast<double>(n + 1) * dt), 1e-12);

  const double du = opts.du > 0.0 ? opts.du : 0.1 / l_max;
  if (du > 0.5 / l_max)
    throw InvalidArgument("sample_indirect: du exceeds the explicit-likelihood guard " +
                          std::to_string(0.5 / l_max));
  const double burn = opts.burn_in >= 0.0 ? opts.burn_in : 20.0 / l_slow;
  const double thin = opts.thinning > 0.0 ? opts.thinning : 1.0 / l_slow;
  const Index burn_steps = static_cast<Index>(std::ceil(burn / du));
  const Index thin_steps =
      std::max<Index>(1, static_cast<Index>(std::llround(thin / du)));
  const double noise_scale = std::sqrt(2.0 * du / dt);

  // theta-implicit prior diffusion: M_minus = I + theta (du/dt) Hq
  const double theta = opts.theta;
  Eigen::VectorXd m_diag =
      Eigen::VectorXd::Ones(n + 1) + theta * (du / dt) * hp.diagonal();
  Eigen::VectorXd m_off = theta * (du / dt) * hp.off_diagonal();
  const SymTridiagd m_minus(std::move(m_diag), std::move(m_off));
  const SymTridiagd::Factor factor = m_minus.factorize();
  const Eigen::VectorXd plus_diag =
      Eigen::VectorXd::Ones(n + 1) - (1.0 - theta) * (du / dt) * hp.diagonal();
  const Eigen::VectorXd plus_off = -(1.0 - theta) * (du / dt) * hp.off_diagonal();

  // constant part of the prior gradient (the +-1/2 nodal terms)
  Eigen::VectorXd bvec = Eigen::VectorXd::Zero(n + 1);
  bvec[0] = -0.5;
  bvec[n] = 0.5;

  const int chains = std::max(opts.n_chains, 1);
  const Index per_chain = (opts.n_samples + chains - 1) / static_cast<Index>(chains);

  std::vector<RecordNodes> rec_nodes;
  for (const auto& rec : data.records) rec_nodes.push_back(record_nodes(rec, grid));

  struct ChainOut {
    Eigen::MatrixXd paths;
    std::vector<double> vtrace;
  };
  std::vector<ChainOut> outs(chains);
  std::vector<std::exception_ptr> errors(chains);

  auto worker = [&](int c) {
    try {
      Rng rng(substream(opts.seed, 0x51a7e57eULL + static_cast<std::uint64_t>(c)));
      Eigen::VectorXd s = s_star;
      Eigen::VectorXd rhs(n + 1);
      outs[c].paths.resize(per_chain, n + 1);
      outs[c].vtrace.reserve(per_chain);
      double last_value = 0.0;

      const auto step = [&]() {
        const Eigen::VectorXd r = s.array().exp().matrix();
        const Eigen::VectorXd cum_rl = trapezoid_prefix((r + data.lambda).eval(), dt);
        LikelihoodEval lik = likelihood_eval(r, cum_rl, rec_nodes, dt, n, nullptr);
        last_value = lik.value;
        rhs = plus_diag.cwiseProduct(s);
        rhs.head(n) += plus_off.cwiseProduct(s.tail(n));
        rhs.tail(n) += plus_off.cwiseProduct(s.head(n));
        rhs -= (du / dt) * (bvec + lik.gradient);
        for (Index j = 0; j <= n; ++j) rhs[j] += noise_scale * rng.normal();
        s = factor.solve(rhs);
        if ((s - s_star).cwiseAbs().maxCoeff() > opts.blowup_threshold)
          throw Instability("sample_indirect: path left the trust region; reduce du");
      };

      for (Index k = 0; k < burn_steps; ++k) step();
      for (Index rtn = 0; rtn < per_chain; ++rtn) {
        for (Index k = 0; k < thin_steps; ++k) step();
        outs[c].paths.row(rtn) = s.transpose();
        // likelihood value lags the state by one step; fine for a drift trace
        const double prior = prior_value(LogRatePath(grid, s), params, false);
        outs[c].vtrace.push_back(prior + last_value);
      }
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  if (chains == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < chains; ++c) threads.emplace_back(worker, c);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SampleSet set;
  set.du = du;
  set.burn_in = static_cast<double>(burn_steps) * du;
  set.thinning = static_cast<double>(thin_steps) * du;
  set.n_chains = chains;
  set.samples_per_chain = per_chain;
  std::vector<Index> tracked = opts.track_nodes;
  if (tracked.empty()) tracked.push_back(grid.nodes() / 2);
  set.tracked_nodes = tracked;

  const Index total = per_chain * chains;
  set.paths.resize(total, n + 1);
  set.marginals.resize(total, static_cast<Index>(tracked.size()));
  for (int c = 0; c < chains; ++c) {
    set.paths.middleRows(c * per_chain, per_chain) = outs[c].paths;
    set.v_trace.insert(set.v_trace.end(), outs[c].vtrace.begin(),
                       outs[c].vtrace.end());
  }
  for (Index k = 0; k < static_cast<Index>(tracked.size()); ++k)
    set.marginals.col(k) = set.paths.col(tracked[k]);

  set.ess.resize(tracked.size());
  set.exp_x_mean.resize(tracked.size());
  set.exp_x_se.resize(tracked.size());
  for (Index k = 0; k < static_cast<Index>(tracked.size()); ++k) {
    set.ess[k] = detail::batch_means(set.marginals.col(k), chains).ess;
    const detail::BatchSummary fx =
        detail::batch_means(set.marginals.col(k).array().exp().matrix(), chains);
    set.exp_x_mean[k] = fx.value;
    set.exp_x_se[k] = fx.se;
  }
  return set;
}

}  // namespace ratefield
