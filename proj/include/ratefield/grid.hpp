#pragma once

#include <Eigen/Core>

#include "ratefield/errors.hpp"

namespace ratefield {

using Index = Eigen::Index;

// Uniform discretization of [0, T] with n_steps intervals (n_steps + 1 nodes).
// Node j sits at time j * dt; the last node lands exactly on T.
class TimeGrid {
public:
  TimeGrid(double t_end, Index n_steps);

  double t_end() const { return t_end_; }
  Index n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  Index nodes() const { return n_steps_ + 1; }
  double time_at(Index j) const { return static_cast<double>(j) * dt_; }

  // Nearest node to time t; half-integer ties go to the lower node.
  // Result is clamped to [0, n_steps].
  Index nearest_node(double t) const;

  // Trapezoid quadrature weights (1/2 at the endpoints, 1 inside).
  Eigen::VectorXd trapezoid_weights() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
  double t_end_;
  Index n_steps_;
  double dt_;
};

TimeGrid make_grid(double t_end, Index n_steps);

// Log-rate values s_j on a grid, one per node; the rate is exp(s).
class LogRatePath {
public:
  LogRatePath(TimeGrid grid, Eigen::VectorXd values);

  const TimeGrid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Index size() const { return values_.size(); }
  double operator[](Index j) const { return values_[j]; }

  Eigen::ArrayXd rate() const { return values_.array().exp(); }

private:
  TimeGrid grid_;
  Eigen::VectorXd values_;
};

// Sorted event times in [0, t_end]. The container itself is grid-free;
// binning onto a grid happens in bin_events.
class SpikeTrain {
public:
  explicit SpikeTrain(Eigen::VectorXd times);

  const Eigen::VectorXd& times() const { return times_; }
  Index count() const { return times_.size(); }

private:
  Eigen::VectorXd times_;
};

// Per-node event counts; an event at time u goes to the nearest node
// (ties to the lower node). Sum of counts equals the event count.
Eigen::VectorXi bin_events(const SpikeTrain& spikes, const TimeGrid& grid);

// Sum of squared increments of a path expression.
template <typename Derived>
double quadratic_variation_of(const Eigen::MatrixBase<Derived>& values) {
  const Index n = values.size();
  if (n < 2) return 0.0;
  return (values.segment(1, n - 1) - values.segment(0, n - 1)).squaredNorm();
}

double quadratic_variation(const LogRatePath& path);

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b,
                              const char* where) {
  if (!(a == b))
    throw InvalidArgument(std::string(where) + ": paths live on different grids");
}

}  // namespace ratefield
