#include "ratefield/grid.hpp"

#include <cmath>

namespace ratefield {

TimeGrid::TimeGrid(double t_end, Index n_steps) : t_end_(t_end), n_steps_(n_steps) {
  if (!(t_end > 0.0) || !std::isfinite(t_end))
    throw InvalidArgument("TimeGrid: t_end must be positive and finite");
  if (n_steps < 2) throw InvalidArgument("TimeGrid: n_steps must be at least 2");
  dt_ = t_end_ / static_cast<double>(n_steps_);
}

Index TimeGrid::nearest_node(double t) const {
  // ceil(x - 1/2) rounds to nearest with half-integer ties taken downward
  const double j = std::ceil(t / dt_ - 0.5);
  if (j < 0.0) return 0;
  if (j > static_cast<double>(n_steps_)) return n_steps_;
  return static_cast<Index>(j);
}

Eigen::VectorXd TimeGrid::trapezoid_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(nodes());
  w[0] = 0.5;
  w[nodes() - 1] = 0.5;
  return w;
}

TimeGrid make_grid(double t_end, Index n_steps) { return TimeGrid(t_end, n_steps); }

LogRatePath::LogRatePath(TimeGrid grid, Eigen::VectorXd values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.nodes())
    throw InvalidArgument("LogRatePath: value count does not match grid nodes");
  if (!values_.allFinite())
    throw InvalidArgument("LogRatePath: values must all be finite");
}

SpikeTrain::SpikeTrain(Eigen::VectorXd times) : times_(std::move(times)) {
  for (Index i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]))
      throw InvalidArgument("SpikeTrain: event times must be finite");
    if (i > 0 && times_[i] < times_[i - 1])
      throw InvalidArgument("SpikeTrain: event times must be nondecreasing");
  }
}

Eigen::VectorXi bin_events(const SpikeTrain& spikes, const TimeGrid& grid) {
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(grid.nodes());
  const auto& t = spikes.times();
  for (Index i = 0; i < t.size(); ++i) {
    if (t[i] < 0.0 || t[i] > grid.t_end())
      throw InvalidArgument("bin_events: event time outside [0, t_end]");
    counts[grid.nearest_node(t[i])] += 1;
  }
  return counts;
}

double quadratic_variation(const LogRatePath& path) {
  return quadratic_variation_of(path.values());
}

}  // namespace ratefield
