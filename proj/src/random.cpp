#include "cubetop/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cubetop {

namespace {

constexpr std::uint64_t kInversionCap = 1000;

// Inversion cdf F(0..k), built by the same running sums as the sequential
// walk. The cdf saturates below 1 in floating point; the cap stops the walk
// far past any mass that matters.
std::vector<double> inversion_table(double mean) {
  std::vector<double> cdf;
  double p = std::exp(-mean);
  double acc = p;
  cdf.push_back(acc);
  for (std::uint64_t k = 1; k <= kInversionCap; ++k) {
    p *= mean / static_cast<double>(k);
    acc += p;
    cdf.push_back(acc);
    if (p == 0.0 && k > mean) break;
  }
  return cdf;
}

std::uint64_t invert(const std::vector<double>& cdf, double u) {
  // First k with u <= F(k); past the table the walk runs on to the cap.
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return kInversionCap;
  return static_cast<std::uint64_t>(it - cdf.begin());
}

std::uint64_t ptrs(CounterRng& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

} // namespace

std::uint64_t poisson(CounterRng& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean >= 30.0) return ptrs(rng, mean);
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf && k < kInversionCap) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

PoissonSampler::PoissonSampler(double mean) : mean_(mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("Poisson mean must be finite and >= 0");
  if (mean > 0.0 && mean < 30.0) cdf_ = inversion_table(mean);
}

std::uint64_t PoissonSampler::operator()(CounterRng& rng) const {
  if (mean_ == 0.0) return 0;
  if (mean_ < 30.0) return invert(cdf_, rng.uniform());
  return ptrs(rng, mean_);
}

} // namespace cubetop
