#pragma once

#include <stdexcept>
#include <string>

namespace ratefield {

// Precondition / domain violations: bad parameters, grid mismatches,
// out-of-range inputs.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A quadrature, factorization, or other numerical routine could not reach
// the requested tolerance.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Iterative solver exhausted its iteration budget.
class NonConvergence : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// The maximum-likelihood problem has no finite solution (empty spike train).
class NoSolution : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Langevin chain left the trust region; suggests a smaller fictitious-time step.
class Instability : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Discretization too coarse for the requested simulation; carries the
// minimum number of grid steps that would satisfy the validity bound.
class ResolutionTooCoarse : public InvalidArgument {
public:
  ResolutionTooCoarse(const std::string& msg, long required_steps)
      : InvalidArgument(msg), required_steps(required_steps) {}
  long required_steps;
};

// Shape-deviation window does not cover the kernel decay length; carries
// the required half-width in time units.
class CoverageError : public InvalidArgument {
public:
  CoverageError(const std::string& msg, double required_half_width)
      : InvalidArgument(msg), required_half_width(required_half_width) {}
  double required_half_width;
};

// Not enough effective samples for the requested statistic; carries a rough
// estimate of the required chain length (retained samples).
class StatisticsError : public std::runtime_error {
public:
  StatisticsError(const std::string& msg, double required_samples)
      : std::runtime_error(msg), required_samples(required_samples) {}
  double required_samples;
};

// A redundant evaluation that must agree with another one did not.
class ConsistencyFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace ratefield
