#include "ratefield/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ratefield/errors.hpp"

namespace ratefield {

namespace {

// Cell of node j under the nearest-node binning rule: [j*dt - dt/2, j*dt + dt/2]
// clipped to [0, T]. End cells have half width.
struct Cell {
  double lo, hi;
};

Cell node_cell(const TimeGrid& grid, Index j) {
  const double dt = grid.dt();
  const double t = grid.time_at(j);
  return {std::max(0.0, t - 0.5 * dt), std::min(grid.t_end(), t + 0.5 * dt)};
}

void check_spike_resolution(const LogRatePath& path, const char* where) {
  const double rmax = path.values().maxCoeff();
  const double dt = path.grid().dt();
  if (std::exp(rmax) * dt > 0.1) {
    const long required =
        static_cast<long>(std::ceil(path.grid().t_end() * std::exp(rmax) / 0.1));
    throw ResolutionTooCoarse(
        std::string(where) +
            ": exp(max s) * dt exceeds 0.1; need n_steps >= " + std::to_string(required),
        required);
  }
}

}  // namespace

LogRatePath simulate_gbm_log(double s0, double sigma, const TimeGrid& grid, RngSeed seed) {
  if (!(sigma > 0.0)) throw InvalidArgument("simulate_gbm_log: sigma must be positive");
  Rng rng(seed);
  const double dt = grid.dt();
  const double vol = sigma * std::sqrt(dt);
  const double drift = -0.5 * sigma * sigma * dt;
  Eigen::VectorXd s(grid.nodes());
  s[0] = s0;
  for (Index j = 1; j < grid.nodes(); ++j)
    s[j] = s[j - 1] + vol * rng.normal() + drift;
  return LogRatePath(grid, std::move(s));
}

SpikeTrain simulate_spikes(const LogRatePath& path, RngSeed seed) {
  check_spike_resolution(path, "simulate_spikes");
  const TimeGrid& grid = path.grid();
  const double dt = grid.dt();
  std::vector<double> events;
  for (Index j = 0; j < grid.nodes(); ++j) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(j)));
    const long k = rng.poisson(std::exp(path[j]) * dt);
    const Cell c = node_cell(grid, j);
    for (long e = 0; e < k; ++e) events.push_back(c.lo + rng.uniform() * (c.hi - c.lo));
  }
  std::sort(events.begin(), events.end());
  return SpikeTrain(Eigen::Map<Eigen::VectorXd>(events.data(),
                                                static_cast<Index>(events.size())));
}

std::vector<MentionRecord> simulate_mentions(const LogRatePath& rate_path,
                                             const LogRatePath& lambda_path,
                                             Index n_people, RngSeed seed) {
  require_same_grid(rate_path.grid(), lambda_path.grid(), "simulate_mentions");
  check_spike_resolution(lambda_path, "simulate_mentions");
  const TimeGrid& grid = rate_path.grid();
  const double T = grid.t_end();
  const Eigen::ArrayXd hazard = rate_path.rate();

  std::vector<MentionRecord> records;
  for (Index person = 0; person < n_people; ++person) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(person)));
    const double entry = rng.uniform() * T;

    // Death: invert the cumulative hazard accumulated over node cells,
    // starting at the entry time.
    const double threshold = -std::log(1.0 - rng.uniform());
    double death = T;  // survives the window unless the threshold is hit
    {
      double acc = 0.0;
      for (Index j = grid.nearest_node(entry); j < grid.nodes(); ++j) {
        const Cell c = node_cell(grid, j);
        const double lo = std::max(c.lo, entry);
        if (lo >= c.hi) continue;
        const double add = hazard[j] * (c.hi - lo);
        if (acc + add >= threshold) {
          death = lo + (threshold - acc) / hazard[j];
          break;
        }
        acc += add;
      }
    }
    const double horizon = std::min(death, T);

    // Mentions: same per-node thinning primitive as simulate_spikes,
    // restricted to [entry, horizon).
    double first = -1.0, last = -1.0;
    int n_mentions = 0;
    for (Index j = 0; j < grid.nodes(); ++j) {
      const long k = rng.poisson(std::exp(lambda_path[j]) * grid.dt());
      const Cell c = node_cell(grid, j);
      for (long e = 0; e < k; ++e) {
        const double t = c.lo + rng.uniform() * (c.hi - c.lo);
        if (t < entry || t >= horizon) continue;
        if (n_mentions == 0) {
          first = last = t;
        } else {
          first = std::min(first, t);
          last = std::max(last, t);
        }
        ++n_mentions;
      }
    }
    if (n_mentions >= 2) records.push_back({first, last});
  }
  return records;
}

}  // namespace ratefield
