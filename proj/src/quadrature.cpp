#include "ratefield/quadrature.hpp"

#include <cmath>
#include <queue>
#include <vector>

namespace ratefield {

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
  double kronrod;
  double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double gauss = fc * kWg[3];
  double kronrod = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double f1 = f(c - x);
    const double f2 = f(c + x);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  kronrod *= h;
  gauss *= h;
  const double diff = std::abs(kronrod - gauss);
  // standard conservative GK error model
  const double err = diff > 0.0 ? diff * std::min(1.0, std::pow(200.0 * diff, 1.5))
                                : 0.0;
  return {kronrod, std::max(err, std::abs(kronrod) * 1e-15)};
}

struct Panel {
  double a, b, value, error;
  int depth;
  bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  PanelResult r0 = gk15(f, a, b);
  std::priority_queue<Panel> heap;
  heap.push({a, b, r0.kronrod, r0.error, 0});
  double total = r0.kronrod;
  double total_err = r0.error;
  int n_intervals = 1;
  while (total_err > opts.abs_tol && n_intervals < opts.max_intervals) {
    Panel worst = heap.top();
    heap.pop();
    if (worst.depth >= opts.max_depth) {
      // cannot split further; if this panel dominates the error, give up
      if (worst.error > opts.abs_tol)
        throw NumericalFailure("integrate: max depth reached before tolerance " +
                               std::to_string(opts.abs_tol));
      heap.push(worst);
      break;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    PanelResult left = gk15(f, worst.a, mid);
    PanelResult right = gk15(f, mid, worst.b);
    total += left.kronrod + right.kronrod - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push({worst.a, mid, left.kronrod, left.error, worst.depth + 1});
    heap.push({mid, worst.b, right.kronrod, right.error, worst.depth + 1});
    n_intervals += 1;
  }
  if (total_err > opts.abs_tol)
    throw NumericalFailure("integrate: interval budget exhausted at error " +
                           std::to_string(total_err) + " > tol " +
                           std::to_string(opts.abs_tol));
  return total;
}

double integrate_decaying(const std::function<double(double)>& f, double a,
                          double initial_span, const QuadratureOptions& opts) {
  if (!(initial_span > 0.0))
    throw InvalidArgument("integrate_decaying: initial_span must be positive");
  QuadratureOptions seg = opts;
  seg.abs_tol = opts.abs_tol / 4.0;
  double total = 0.0;
  double lo = a;
  double span = initial_span;
  int quiet = 0;
  for (int k = 0; k < 64; ++k) {
    const double hi = lo + span;
    const double part = integrate(f, lo, hi, seg);
    total += part;
    quiet = (std::abs(part) < opts.abs_tol / 4.0) ? quiet + 1 : 0;
    if (quiet >= 2) return total;
    lo = hi;
    span *= 2.0;
  }
  throw NumericalFailure("integrate_decaying: integrand did not decay");
}

}  // namespace ratefield
