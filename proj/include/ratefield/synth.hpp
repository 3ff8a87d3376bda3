#pragma once

#include <vector>

#include "ratefield/grid.hpp"
#include "ratefield/random.hpp"

namespace ratefield {

// First and last mention times of one individual; only individuals with at
// least two mentions are recorded.
struct MentionRecord {
  double i = 0.0;  // first mention
  double f = 0.0;  // last mention
};

// Exact log-scheme GBM increments: s_{j+1} = s_j + sigma sqrt(dt) xi - sigma^2 dt / 2.
LogRatePath simulate_gbm_log(double s0, double sigma, const TimeGrid& grid, RngSeed seed);

// Per-node Poisson counts with mean exp(s_j) * dt, event times uniform within
// the node's cell. Requires exp(max s) * dt <= 0.1; otherwise throws
// ResolutionTooCoarse naming the minimum n_steps.
SpikeTrain simulate_spikes(const LogRatePath& path, RngSeed seed);

// Entry times uniform on [0, T]; death hazard exp(rate_path); mentions are a
// per-node thinned Poisson process with rate exp(lambda_path) while alive.
// Individuals with fewer than two mentions before min(death, T) are dropped.
std::vector<MentionRecord> simulate_mentions(const LogRatePath& rate_path,
                                             const LogRatePath& lambda_path,
                                             Index n_people, RngSeed seed);

}  // namespace ratefield
