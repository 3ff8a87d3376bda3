#pragma once

// Internal batch-means machinery shared by the two Langevin samplers.

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "ratefield/grid.hpp"

namespace ratefield::detail {

struct BatchSummary {
  double value = 0.0, se = 0.0, ess = 0.0;
};

// Batch-means estimate for the mean of h over a chain-segmented sample:
// batches never straddle chains, so the spread of batch means captures the
// autocorrelation within each chain.
inline BatchSummary batch_means(const Eigen::VectorXd& h, Index chains) {
  const Index n = h.size();
  const Index per_chain = n / chains;
  const Index batches_per_chain = std::max<Index>(
      8, static_cast<Index>(std::sqrt(static_cast<double>(per_chain))));
  const Index batch_len = std::max<Index>(1, per_chain / batches_per_chain);

  BatchSummary s;
  s.value = h.mean();
  std::vector<double> means;
  for (Index c = 0; c < chains; ++c) {
    const Index base = c * per_chain;
    for (Index b = 0; b + batch_len <= per_chain; b += batch_len)
      means.push_back(h.segment(base + b, batch_len).mean());
  }
  const Index nb = static_cast<Index>(means.size());
  if (nb < 2) {
    s.se = std::abs(s.value);
    s.ess = 1.0;
    return s;
  }
  double mb = 0.0;
  for (double v : means) mb += v;
  mb /= static_cast<double>(nb);
  double var_bm = 0.0;
  for (double v : means) var_bm += (v - mb) * (v - mb);
  var_bm /= static_cast<double>(nb - 1);
  const double var_h = (h.array() - s.value).square().sum() /
                       static_cast<double>(std::max<Index>(n - 1, 1));
  s.se = std::sqrt(var_bm / static_cast<double>(nb));
  if (var_bm > 0.0 && var_h > 0.0)
    s.ess = var_h * static_cast<double>(n) / (var_bm * static_cast<double>(batch_len));
  else
    s.ess = static_cast<double>(n);
  s.ess = std::min(s.ess, static_cast<double>(n));
  return s;
}

}  // namespace ratefield::detail
