#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace cubetop {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream keyed by (seed, stream, substream). Draws depend
/// only on the key, never on evaluation order, so replicates and pixels can
/// be generated in any order or in parallel with identical results.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : state_(mix64(mix64(mix64(seed) ^ (stream + 0x9e3779b97f4a7c15ULL)) ^ (substream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

private:
  std::uint64_t state_;
};

/// Exact Poisson draw: sequential inversion for mean < 30, Hormann's PTRS
/// transformed rejection otherwise.
std::uint64_t poisson(CounterRng& rng, double mean);

/// Poisson draws with a fixed mean. Below mean 30 the inversion cdf is
/// tabulated once; draws equal those of poisson() for the same stream.
class PoissonSampler {
public:
  explicit PoissonSampler(double mean);
  std::uint64_t operator()(CounterRng& rng) const;

private:
  double mean_;
  std::vector<double> cdf_;
};

/// Standard normal by Box-Muller (one of the pair).
inline double standard_normal(CounterRng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace cubetop
