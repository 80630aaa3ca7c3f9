#include "cubetop/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cubetop/error.hpp"

namespace cubetop {

LifetimeVector::LifetimeVector(std::vector<double> lifetimes) : sorted_(std::move(lifetimes)) {
  for (double l : sorted_) {
    if (!std::isfinite(l) || l < 0.0) {
      throw std::invalid_argument("lifetimes must be finite and >= 0 (resolve infinite deaths first)");
    }
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double LifetimeVector::sum() const { return std::accumulate(sorted_.begin(), sorted_.end(), 0.0); }

namespace {

void require_nonempty(const LifetimeVector& v, const char* what) {
  if (v.empty()) throw UndefinedStatistic(std::string(what) + " is undefined for an empty lifetime set");
}

} // namespace

double persistent_entropy(const LifetimeVector& v) {
  require_nonempty(v, "persistent entropy");
  const double total = v.sum();
  if (!(total > 0.0)) throw UndefinedStatistic("persistent entropy is undefined when all lifetimes are zero");
  double h = 0.0;
  for (double l : v.sorted()) {
    if (l > 0.0) {
      const double q = l / total;
      h += q * std::log(q);
    }
  }
  // Round-off can step outside [-ln K, 0] by an ulp; the bounds are exact.
  return std::clamp(h, -std::log(static_cast<double>(v.size())), 0.0);
}

double alps(const LifetimeVector& v) {
  require_nonempty(v, "ALPS");
  const auto l = v.sorted();
  const std::size_t k = l.size();
  double acc = 0.0;
  // i is 1-based rank; K - i + 1 lifetimes exceed any eta below l_(i).
  for (std::size_t i = 1; i < k; ++i) {
    const double alive = static_cast<double>(k - i + 1);
    acc -= l[i - 1] * std::log1p(-1.0 / alive);
  }
  return acc;
}

double longest_barcode(const LifetimeVector& v) {
  require_nonempty(v, "longest barcode");
  return v.sorted().back();
}

double mean_persistence(const LifetimeVector& v) {
  require_nonempty(v, "mean persistence");
  return v.sum() / static_cast<double>(v.size());
}

double lifetime_power_sum(const LifetimeVector& v, int k) {
  if (k < 1) throw std::invalid_argument("lifetime power sum needs k >= 1");
  double acc = 0.0;
  for (double l : v.sorted()) acc += std::pow(l, k);
  return acc;
}

double central_moment(const LifetimeVector& v, int k) {
  require_nonempty(v, "central moment");
  const double mean = mean_persistence(v);
  double acc = 0.0;
  for (double l : v.sorted()) acc += std::pow(l - mean, k);
  return acc / static_cast<double>(v.size());
}

namespace {

double checked_m2(const LifetimeVector& v, const char* what) {
  if (v.size() < 2) throw UndefinedStatistic(std::string(what) + " needs at least two lifetimes");
  const double m2 = central_moment(v, 2);
  if (!(m2 > 0.0)) throw UndefinedStatistic(std::string(what) + " is undefined for zero lifetime variance");
  return m2;
}

} // namespace

double snr(const LifetimeVector& v) {
  const double m2 = checked_m2(v, "SNR");
  return mean_persistence(v) / std::sqrt(m2);
}

double skewness(const LifetimeVector& v) {
  const double m2 = checked_m2(v, "skewness");
  return central_moment(v, 3) / std::pow(m2, 1.5);
}

Statistic parse_statistic(std::string_view name) {
  static constexpr std::pair<std::string_view, Statistic> names[] = {
      {"count", Statistic::count}, {"entropy", Statistic::entropy}, {"longest", Statistic::longest},
      {"mean", Statistic::mean},   {"alps", Statistic::alps},       {"l1", Statistic::l1},
      {"l2", Statistic::l2},       {"snr", Statistic::snr},         {"skew", Statistic::skew}};
  for (const auto& [n, s] : names) {
    if (n == name) return s;
  }
  throw std::invalid_argument("unknown statistic '" + std::string(name) +
                              "' (expected count, entropy, longest, mean, alps, l1, l2, snr or skew)");
}

std::string_view to_string(Statistic s) {
  switch (s) {
    case Statistic::count: return "count";
    case Statistic::entropy: return "entropy";
    case Statistic::longest: return "longest";
    case Statistic::mean: return "mean";
    case Statistic::alps: return "alps";
    case Statistic::l1: return "l1";
    case Statistic::l2: return "l2";
    case Statistic::snr: return "snr";
    case Statistic::skew: return "skew";
  }
  return "unknown";
}

double evaluate_statistic(Statistic s, const LifetimeVector& v) {
  switch (s) {
    case Statistic::count: return static_cast<double>(v.size());
    case Statistic::entropy: return persistent_entropy(v);
    case Statistic::longest: return longest_barcode(v);
    case Statistic::mean: return mean_persistence(v);
    case Statistic::alps: return alps(v);
    case Statistic::l1: return lifetime_power_sum(v, 1);
    case Statistic::l2: return lifetime_power_sum(v, 2);
    case Statistic::snr: return snr(v);
    case Statistic::skew: return skewness(v);
  }
  throw std::invalid_argument("unknown statistic");
}

double evaluate_statistic(Statistic s, const MarkedPointSet& points) {
  return evaluate_statistic(s, LifetimeVector(points));
}

} // namespace cubetop
