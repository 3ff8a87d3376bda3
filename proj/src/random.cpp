#include "ratefield/random.hpp"

#include <cmath>

#include "ratefield/errors.hpp"

namespace ratefield {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngSeed substream(RngSeed base, std::uint64_t stream) {
  // Mix the stream id through SplitMix64 starting from the base seed; two
  // distinct ids give unrelated seeds.
  std::uint64_t state = base.value ^ 0x5851f42d4c957f2dULL;
  std::uint64_t a = splitmix64(state);
  state ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(state);
  return RngSeed{a ^ rotl(b, 23)};
}

Rng::Rng(RngSeed seed) {
  std::uint64_t state = seed.value;
  for (auto& si : s_) si = splitmix64(state);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; both uniforms are always consumed so the draw order is fixed.
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(phi);
  has_cached_normal_ = true;
  return r * std::cos(phi);
}

long Rng::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw InvalidArgument("Rng::poisson: mean must be finite and nonnegative");
  if (mean == 0.0) return 0;
  if (mean < 60.0) {
    // inversion by sequential search
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    long k = 0;
    while (u > cdf && k < 4096) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // split recursively; preserves determinism and avoids long searches
  const long half = poisson(mean / 2.0);
  return half + poisson(mean - mean / 2.0);
}

}  // namespace ratefield
