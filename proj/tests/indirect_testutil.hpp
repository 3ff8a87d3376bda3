#pragma once

// Test-side generators and closed forms for the indirect model, kept
// independent of the library's kernel implementation.

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "ratefield/random.hpp"
#include "ratefield/synth.hpp"

namespace testutil {

// continuum closed form of B_{i,f} for constant rates
inline double b_const(double i, double f, double r, double lam, double T) {
  const double c = r + lam;
  return (r / c) * (std::exp(-c * (f - i)) - std::exp(-c * (T - i))) +
         std::exp(-c * (T - i));
}

// CDF of the last-mention time f given first mention i (constant rates):
// p(f | i, *) = lam e^{-r(f-i)} [r/c + (lam/c) e^{-c(T-f)}] / (1 - B_{i,i})
inline double last_mention_cdf(double f, double i, double r, double lam, double T) {
  const double c = r + lam;
  const double num = (lam / c) * ((1.0 - std::exp(-r * (f - i))) +
                                  std::exp(r * i - c * T) *
                                      (std::exp(lam * f) - std::exp(lam * i)));
  const double den = (lam / c) * (1.0 - std::exp(-c * (T - i)));
  return num / den;
}

// exact sampler for f | i by bisection on the closed-form CDF
inline double sample_last_mention(ratefield::Rng& rng, double i, double r, double lam,
                                  double T) {
  const double u = rng.uniform();
  double lo = i, hi = T;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (last_mention_cdf(mid, i, r, lam, T) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// grid-based generator for a time-dependent rate path (plain cumulative sums,
// no library kernels): draws f | i from p(f) ~ lam_f S_{i,f} B_{f,f}
struct GridConditional {
  Eigen::VectorXd tgrid;       // node times
  Eigen::VectorXd cdf;         // cdf over nodes >= a for the current i
  double dt;

  GridConditional(const Eigen::VectorXd& rate, const Eigen::VectorXd& lambda,
                  double t_end) {
    const Eigen::Index n = rate.size() - 1;
    dt = t_end / static_cast<double>(n);
    tgrid.resize(n + 1);
    for (Eigen::Index j = 0; j <= n; ++j) tgrid[j] = dt * static_cast<double>(j);
    rate_ = rate;
    lambda_ = lambda;
    // prefix integrals of r and r + lambda
    pr_.resize(n + 1);
    prl_.resize(n + 1);
    pr_[0] = prl_[0] = 0.0;
    for (Eigen::Index j = 1; j <= n; ++j) {
      pr_[j] = pr_[j - 1] + 0.5 * dt * (rate_[j - 1] + rate_[j]);
      prl_[j] = prl_[j - 1] + 0.5 * dt * (rate_[j - 1] + lambda_[j - 1] + rate_[j] +
                                          lambda_[j]);
    }
    // B_{f,f} per node
    bff_.resize(n + 1);
    for (Eigen::Index b = 0; b <= n; ++b) {
      double acc = std::exp(-(prl_[n] - prl_[b]));
      for (Eigen::Index t = b; t <= n && b < n; ++t) {
        const double w = (t == b || t == n) ? 0.5 : 1.0;
        acc += w * dt * rate_[t] * std::exp(-(prl_[t] - prl_[b]));
      }
      bff_[b] = acc;
    }
  }

  double sample_f(ratefield::Rng& rng, double i) {
    const Eigen::Index n = tgrid.size() - 1;
    const Eigen::Index a = std::min<Eigen::Index>(
        n, static_cast<Eigen::Index>(std::ceil(i / dt - 0.5)));
    Eigen::VectorXd dens = Eigen::VectorXd::Zero(n + 1);
    for (Eigen::Index j = a; j <= n; ++j)
      dens[j] = lambda_[j] * std::exp(-(pr_[j] - pr_[a])) * bff_[j];
    cdf.resize(n + 1);
    cdf[a] = 0.0;
    for (Eigen::Index j = a + 1; j <= n; ++j)
      cdf[j] = cdf[j - 1] + 0.5 * dt * (dens[j - 1] + dens[j]);
    for (Eigen::Index j = 0; j < a; ++j) cdf[j] = 0.0;
    const double u = rng.uniform() * cdf[n];
    Eigen::Index j = a + 1;
    while (j < n && cdf[j] < u) ++j;
    const double c0 = cdf[j - 1], c1 = cdf[j];
    const double fr = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.5;
    return tgrid[j - 1] + fr * dt;
  }

 private:
  Eigen::VectorXd rate_, lambda_, pr_, prl_, bff_;
};

}  // namespace testutil
