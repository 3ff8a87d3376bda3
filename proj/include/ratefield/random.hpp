#pragma once

#include <cstdint>

namespace ratefield {

// Seed value for the reproducible generator below. Identical seed and
// parameters give bit-identical streams on any IEEE-754 platform.
struct RngSeed {
  std::uint64_t value = 0;
};

// Derive an independent substream seed (per person, node, or chain) so that
// parallel generation stays deterministic regardless of scheduling.
RngSeed substream(RngSeed base, std::uint64_t stream);

// xoshiro256++ with SplitMix64 state expansion. Distributions are generated
// in-house (Box-Muller normal, inversion Poisson) with a fixed draw order,
// since the std:: distributions are not bit-stable across implementations.
class Rng {
public:
  explicit Rng(RngSeed seed);

  std::uint64_t next_u64();
  double uniform();            // [0, 1)
  double normal();             // standard normal
  long poisson(double mean);   // mean >= 0, intended for modest means

private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ratefield
