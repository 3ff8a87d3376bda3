#include "ratefield/perturbative.hpp"

#include <cmath>
#include <iostream>
#include <vector>

#include "ratefield/quadrature.hpp"

namespace ratefield {

namespace {

constexpr double kZMax = 20.0;  // kernels are below 1e-17 of scale past this

double y2_of(const LocalCoeff& c) { return c.sigma / (2.0 * std::sqrt(c.alpha)); }
double corr_rate(const LocalCoeff& c) { return c.sigma * std::sqrt(c.alpha); }

// ---- scaled building blocks (alpha = 1, sigma = 1 units) -------------------
//
// ctilde(z, u) = (1/sqrt(pi)) int_{sqrt(u)}^inf exp(-v^2 - (z/2)^2/v^2) dv
//   so that C(t, u) = 2 y2 ctilde(sigma sqrt(alpha) |t|, alpha |u|).
// gtilde(z, a) da = G(t, a/alpha) da/alpha / (2 y2), i.e. the scaled kernel.

// 16-point Gauss-Legendre nodes/weights on [0, 1].
struct GL16 {
  double x[16], w[16];
  GL16() {
    static const double xs[8] = {0.0483076656877383162348126,
                                 0.1444719615827964934851864,
                                 0.2392873622521370745446032,
                                 0.3318686022821276497799168,
                                 0.4213512761306353453641194,
                                 0.5068999089322293900237475,
                                 0.5877157572407623290407455,
                                 0.6630442669302152009751152};
    static const double ws[8] = {0.0965400885147278005667648,
                                 0.0956387200792748594190820,
                                 0.0938443990808045656391802,
                                 0.0911738786957638847128686,
                                 0.0876520930044038111427715,
                                 0.0833119242269467552221991,
                                 0.0781938957870703064717409,
                                 0.0723457941088485062253994};
    for (int i = 0; i < 8; ++i) {
      x[i] = 0.5 * (1.0 - xs[i]);
      x[15 - i] = 0.5 * (1.0 + xs[i]);
      w[i] = 0.5 * ws[i];
      w[15 - i] = 0.5 * ws[i];
    }
  }
};

const GL16& gl16() {
  static const GL16 g;
  return g;
}

// Composite GL nodes over [0, hi] split into `panels` equal panels.
struct FixedNodes {
  std::vector<double> x, w;
  FixedNodes(double hi, int panels) {
    const GL16& g = gl16();
    const double h = hi / panels;
    for (int p = 0; p < panels; ++p)
      for (int i = 0; i < 16; ++i) {
        x.push_back((p + g.x[i]) * h);
        w.push_back(g.w[i] * h);
      }
  }
};

double ctilde_integrand(double z, double v) {
  const double r = (v > 0.0) ? 0.5 * z / v : 0.0;
  return std::exp(-v * v - r * r);
}

// ctilde(z, xi^2) accumulated over a descending xi-node list; nodes[k] are the
// lower limits: out[k] = (1/sqrt(pi)) int_{nodes[k]}^inf.
std::vector<double> ctilde_accumulated(double z, const std::vector<double>& nodes,
                                       double xi_hi) {
  const GL16& g = gl16();
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  std::vector<double> out(nodes.size());
  // tail above xi_hi: integrand <= exp(-v^2), int_xihi^inf < exp(-xihi^2)/(2 xihi)
  double acc = 0.0;
  double upper = xi_hi;
  for (Index k = static_cast<Index>(nodes.size()) - 1; k >= 0; --k) {
    const double lo = nodes[k];
    double seg = 0.0;
    const double h = upper - lo;
    for (int i = 0; i < 16; ++i) seg += g.w[i] * ctilde_integrand(z, lo + g.x[i] * h);
    acc += seg * h;
    out[k] = acc * inv_sqrt_pi;
    upper = lo;
  }
  return out;
}

// ---- J and Theta tables in scaled units ------------------------------------

struct KernelTables {
  double dz = 0.0;
  std::vector<double> j;                 // j(z), z = k*dz in [0, kZMax]
  Eigen::MatrixXd ttab;                  // Ttilde(zp, z3), both on the same z grid
  Index nz = 0;

  double interp_j(double z) const {
    if (z >= kZMax) return 0.0;
    const double q = z / dz;
    const Index k = std::min(static_cast<Index>(q), nz - 2);
    const double f = q - static_cast<double>(k);
    return j[k] * (1.0 - f) + j[k + 1] * f;
  }

  double interp_t(double zp, double z3) const {
    if (zp >= kZMax || z3 >= kZMax) return 0.0;
    const double qp = zp / dz, q3 = z3 / dz;
    const Index kp = std::min(static_cast<Index>(qp), nz - 2);
    const Index k3 = std::min(static_cast<Index>(q3), nz - 2);
    const double fp = qp - static_cast<double>(kp);
    const double f3 = q3 - static_cast<double>(k3);
    return ttab(kp, k3) * (1 - fp) * (1 - f3) + ttab(kp + 1, k3) * fp * (1 - f3) +
           ttab(kp, k3 + 1) * (1 - fp) * f3 + ttab(kp + 1, k3 + 1) * fp * f3;
  }
};

KernelTables build_tables() {
  KernelTables tab;
  tab.dz = 0.01;
  tab.nz = static_cast<Index>(kZMax / tab.dz) + 1;

  const double xi_hi = 6.5;  // exp(-xi^2) tail below 4e-19
  FixedNodes xi(xi_hi, 28);
  const Index nxi = static_cast<Index>(xi.x.size());

  // j(z) = -(8/sqrt(pi)) int dxi exp(-xi^2 - (z/(2 xi))^2) ctilde(z, xi^2)
  tab.j.resize(tab.nz);
  for (Index kz = 0; kz < tab.nz; ++kz) {
    const double z = kz * tab.dz;
    const std::vector<double> ct = ctilde_accumulated(z, xi.x, xi_hi);
    double s = 0.0;
    for (Index k = 0; k < nxi; ++k)
      s += xi.w[k] * ctilde_integrand(z, xi.x[k]) * ct[k];
    tab.j[kz] = -(8.0 / std::sqrt(M_PI)) * s;
  }

  // Ttilde(zp, z3) = int dxi 2 xi exp(-xi^2) erfc(zp/(2 xi)) ctilde(z3, xi^2)
  tab.ttab.resize(tab.nz, tab.nz);
  Eigen::MatrixXd ct(tab.nz, nxi);
  for (Index k3 = 0; k3 < tab.nz; ++k3) {
    const std::vector<double> c = ctilde_accumulated(k3 * tab.dz, xi.x, xi_hi);
    for (Index k = 0; k < nxi; ++k) ct(k3, k) = c[k];
  }
  Eigen::MatrixXd ef(tab.nz, nxi);
  for (Index kp = 0; kp < tab.nz; ++kp) {
    const double zp = kp * tab.dz;
    for (Index k = 0; k < nxi; ++k)
      ef(kp, k) = xi.w[k] * 2.0 * xi.x[k] * std::exp(-xi.x[k] * xi.x[k]) *
                  std::erfc(0.5 * zp / xi.x[k]);
  }
  tab.ttab.noalias() = ef * ct.transpose();
  return tab;
}

const KernelTables& tables() {
  static const KernelTables tab = build_tables();
  return tab;
}

// Direct (unscaled) T-function by adaptive quadrature.
double t_function(double x1, double x2, double x3, const LocalCoeff& coeff,
                  double abs_tol) {
  const double a = coeff.alpha;
  const double s = coeff.sigma;
  const double p = std::abs(x1) + std::abs(x2);
  QuadratureOptions q;
  q.abs_tol = abs_tol;
  // rho = xi^2 substitution keeps the integrand smooth at the origin
  const auto integrand = [&](double xi) {
    const double rho = xi * xi;
    if (rho == 0.0) return 0.0;
    const double conv = std::exp(-a * rho) * (s * s / 4.0) *
                        std::erfc(0.5 * s * p / std::sqrt(rho));
    return 2.0 * xi * conv * spacetime_covariance(x3, rho, coeff, abs_tol * 1e-2);
  };
  return integrate_decaying(integrand, 0.0, 1.5 / std::sqrt(a), q);
}

void check_window(const ShapeDeviation& f, const LocalCoeff& coeff,
                  const CorrectionOptions& opts) {
  detail::check_coeff(coeff);
  const double tau = 1.0 / corr_rate(coeff);
  const double half =
      std::min(f.window.time_at(f.center),
               f.window.t_end() - f.window.time_at(f.center));
  if (half < opts.min_half_width_corr * tau)
    throw CoverageError(
        "shape window half-width " + std::to_string(half) +
            " is below the required " + std::to_string(opts.min_half_width_corr) +
            " correlation times (" + std::to_string(opts.min_half_width_corr * tau) + ")",
        opts.min_half_width_corr * tau);
  if (f.values.size() != f.window.nodes())
    throw InvalidArgument("ShapeDeviation: value count does not match window grid");
  if (f.values[f.center] != 0.0)
    throw InvalidArgument("ShapeDeviation: f must vanish at the center node");
}

struct KernelSums {
  double jf = 0.0;    // sum_t J_t f_t dt
  double kff = 0.0;   // sum_{t,t'} K(t,t') f_t f_t' dt^2
};

KernelSums kernel_sums(const ShapeDeviation& f, const LocalCoeff& coeff) {
  const KernelTables& tab = tables();
  const double y2 = y2_of(coeff);
  const double rate = corr_rate(coeff);
  const double dt = f.window.dt();
  const Index n = f.values.size();
  const Eigen::VectorXd w = f.window.trapezoid_weights();

  Eigen::VectorXd z(n);
  for (Index k = 0; k < n; ++k)
    z[k] = rate * std::abs(f.window.time_at(k) - f.window.time_at(f.center));
  Eigen::VectorXd fw = f.values.cwiseProduct(w) * dt;

  KernelSums out;
  const double y2sq = y2 * y2;
  for (Index k = 0; k < n; ++k) out.jf += y2sq * tab.interp_j(z[k]) * fw[k];

  // K(t,t') = 2 y2^3 [Ttilde(z_t + z_t', z_{t-t'}) + 2 Ttilde(z_t + z_{t-t'}, z_t')]
  const double y2c = 2.0 * y2 * y2 * y2;
  double acc = 0.0;
  for (Index a = 0; a < n; ++a) {
    if (fw[a] == 0.0) continue;
    const double za = z[a];
    for (Index b = 0; b < n; ++b) {
      if (fw[b] == 0.0) continue;
      const double zab = rate * dt * std::abs(static_cast<double>(a - b));
      const double kval =
          tab.interp_t(za + z[b], zab) + 2.0 * tab.interp_t(za + zab, z[b]);
      acc += kval * fw[a] * fw[b];
    }
  }
  out.kff = y2c * acc;
  return out;
}

}  // namespace

double MomentSet::central_third() const {
  const double r2 = raw_second();
  return third_raw - 3.0 * mean * r2 + 2.0 * mean * mean * mean;
}

double MomentSet::central_fourth() const {
  const double r2 = raw_second();
  const double m = mean;
  return fourth_raw - 4.0 * m * third_raw + 6.0 * m * m * r2 - 3.0 * m * m * m * m;
}

double MomentSet::excess_kurtosis() const {
  return central_fourth() - 3.0 * variance * variance;
}

MomentSet nonlinearity_moments(double y2) {
  if (!(y2 > 0.0)) throw InvalidArgument("nonlinearity_moments: y2 must be positive");
  if (y2 > 0.3)
    std::cerr << "[ratefield] warning: y2 = " << y2
              << " is outside the perturbative regime (y2 <= 0.3)\n";
  MomentSet m;
  m.mean = -0.5 * y2;
  m.variance = y2 + y2 * y2 / 9.0;
  m.third_raw = -(11.0 / 6.0) * y2 * y2;
  m.fourth_raw = 3.0 * y2 * y2;
  return m;
}

double kernel_J(double t, const LocalCoeff& coeff, double abs_tol) {
  detail::check_coeff(coeff);
  QuadratureOptions q;
  q.abs_tol = abs_tol;
  const auto integrand = [&](double a) {
    if (a <= 0.0) return 0.0;
    return green_function(t, a, coeff) * spacetime_covariance(t, a, coeff, abs_tol * 1e-2);
  };
  return -2.0 * integrate_decaying(integrand, 0.0, 1.0 / coeff.alpha, q);
}

double kernel_K(double t, double t2, const LocalCoeff& coeff, double abs_tol) {
  detail::check_coeff(coeff);
  return t_function(t, t2, t - t2, coeff, abs_tol) +
         2.0 * t_function(t, t - t2, t2, coeff, abs_tol);
}

ShapeDeviation shape_from_path(const LogRatePath& s_star, Index node, double half_width) {
  const TimeGrid& grid = s_star.grid();
  if (node < 0 || node >= grid.nodes())
    throw InvalidArgument("shape_from_path: node outside grid");
  const Index h = static_cast<Index>(std::floor(half_width / grid.dt()));
  const Index lo = node - h;
  const Index hi = node + h;
  if (lo < 0 || hi >= grid.nodes())
    throw CoverageError("shape_from_path: window extends past the solve grid",
                        half_width);
  TimeGrid window(2.0 * static_cast<double>(h) * grid.dt(), 2 * h);
  const double center_rate = std::exp(s_star[node]);
  Eigen::VectorXd f(window.nodes());
  for (Index k = 0; k <= 2 * h; ++k)
    f[k] = std::exp(s_star[lo + k]) - center_rate;
  f[h] = 0.0;
  return ShapeDeviation{window, std::move(f), h};
}

double variance_correction(const ShapeDeviation& f, const LocalCoeff& coeff,
                           const CorrectionOptions& opts) {
  check_window(f, coeff, opts);
  const double y2 = y2_of(coeff);
  const KernelSums s = kernel_sums(f, coeff);
  return y2 * y2 / 9.0 + s.jf + s.kff;
}

double mean_correction(const ShapeDeviation& f, const LocalCoeff& coeff,
                       const CorrectionOptions& opts) {
  check_window(f, coeff, opts);
  const double y2 = y2_of(coeff);
  const KernelSums s = kernel_sums(f, coeff);

  // -(3/16) y2 sum_t [int du G(t,u)] f_t^2 / alpha dt; the u-integral of G
  // equals C(t, 0), evaluated by the covariance quadrature.
  const double dt = f.window.dt();
  const Eigen::VectorXd w = f.window.trapezoid_weights();
  double g1 = 0.0;
  for (Index k = 0; k < f.values.size(); ++k) {
    if (f.values[k] == 0.0) continue;
    const double tau = f.window.time_at(k) - f.window.time_at(f.center);
    g1 += w[k] * dt * spacetime_covariance(tau, 0.0, coeff, opts.abs_tol) *
          f.values[k] * f.values[k];
  }
  return -0.5 * (y2 + s.jf + s.kff) - (3.0 / 16.0) * y2 * g1 / coeff.alpha;
}

namespace detail {

double q_constant_at(const LocalCoeff& coeff, bool same_sign_only) {
  check_coeff(coeff);
  const double rate = corr_rate(coeff);
  const double zmax = 8.0;
  const Index n = 1601;
  const double dt = zmax / rate / static_cast<double>(n - 1);

  Eigen::VectorXd jv(n), tv(n);
  for (Index k = 0; k < n; ++k) {
    tv[k] = dt * static_cast<double>(k);
    jv[k] = kernel_J(tv[k], coeff, 1e-12);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  w[0] = w[n - 1] = 0.5;

  // both-positive quadrant; the quadrants are mirror images of each other
  double acc = 0.0;
  for (Index a = 0; a < n; ++a) {
    const double ja = jv[a] * w[a];
    for (Index b = 0; b < n; ++b)
      acc += ja * jv[b] * w[b] * std::min(tv[a], tv[b]);
  }
  acc *= dt * dt;
  const double quadrants = same_sign_only ? 2.0 : 4.0;
  const double a2s2 = coeff.alpha * coeff.alpha * coeff.sigma * coeff.sigma;
  const double pref = std::pow(std::sqrt(coeff.alpha) / coeff.sigma, 3.0);
  return pref * quadrants * a2s2 * acc;
}

double kernel_J_tabulated(double t, const LocalCoeff& coeff) {
  const double y2 = y2_of(coeff);
  return y2 * y2 * tables().interp_j(corr_rate(coeff) * std::abs(t));
}

double kernel_K_tabulated(double t, double t2, const LocalCoeff& coeff) {
  const double y2 = y2_of(coeff);
  const double rate = corr_rate(coeff);
  const double zt = rate * std::abs(t), z2 = rate * std::abs(t2),
               zd = rate * std::abs(t - t2);
  return 2.0 * y2 * y2 * y2 *
         (tables().interp_t(zt + z2, zd) + 2.0 * tables().interp_t(zt + zd, z2));
}

}  // namespace detail

double q_constant() {
  const double q1 = detail::q_constant_at({1.0, 0.1}, true);
  const double q2 = detail::q_constant_at({2.0, 0.2}, true);
  if (std::abs(q1 - q2) > 1e-3 * std::abs(q1))
    throw ConsistencyFailure("q_constant: parameter dependence detected: " +
                             std::to_string(q1) + " vs " + std::to_string(q2));
  return std::sqrt(q1);
}

EdgeworthDensity::EdgeworthDensity(const MomentSet& m) {
  if (!(m.variance > 0.0))
    throw InvalidArgument("EdgeworthDensity: variance must be positive");
  mean_ = m.mean;
  sd_ = std::sqrt(m.variance);
  const double k3 = m.central_third();
  const double k4 = m.central_fourth() - 3.0 * m.variance * m.variance;
  g3_ = k3 / (m.variance * sd_);
  g4_ = k4 / (m.variance * m.variance);
  lo_ = mean_ - 8.0 * sd_;
  hi_ = mean_ + 8.0 * sd_;

  // Simpson normalization of the clipped expansion over the window.
  const Index n = 4000;  // even
  const double h = (hi_ - lo_) / static_cast<double>(n);
  double pos = 0.0, raw = 0.0;
  for (Index k = 0; k <= n; ++k) {
    const double x = lo_ + h * static_cast<double>(k);
    const double weight = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const double v = unclipped(x);
    pos += weight * std::max(0.0, v);
    raw += weight * v;
  }
  pos *= h / 3.0;
  raw *= h / 3.0;
  norm_ = pos;
  clipped_mass_ = pos - raw;
}

double EdgeworthDensity::unclipped(double x) const {
  const double z = (x - mean_) / sd_;
  const double he3 = z * z * z - 3.0 * z;
  const double he4 = z * z * z * z - 6.0 * z * z + 3.0;
  const double base = std::exp(-0.5 * z * z) / (sd_ * std::sqrt(2.0 * M_PI));
  return base * (1.0 + g3_ / 6.0 * he3 + g4_ / 24.0 * he4);
}

double EdgeworthDensity::operator()(double x) const {
  if (x < lo_ || x > hi_) return 0.0;
  return std::max(0.0, unclipped(x)) / norm_;
}

EdgeworthDensity edgeworth_density(const MomentSet& moments) {
  return EdgeworthDensity(moments);
}

}  // namespace ratefield
