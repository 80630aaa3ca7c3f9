#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubetop/detect.hpp"

namespace cubetop {

/// Finite, nonnegative lifetimes kept in ascending order.
class LifetimeVector {
public:
  LifetimeVector() = default;
  explicit LifetimeVector(std::vector<double> lifetimes);
  explicit LifetimeVector(const MarkedPointSet& points) : LifetimeVector(points.lifetimes()) {}

  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }
  std::span<const double> sorted() const { return sorted_; }
  double sum() const;

private:
  std::vector<double> sorted_;
};

// All logarithms are natural. Each function throws UndefinedStatistic when its
// value does not exist for the given lifetimes.

/// Negated persistent entropy: sum (l/L) ln(l/L), with 0 ln 0 = 0. In
/// [-ln K, 0]; needs K >= 1 and L > 0.
double persistent_entropy(const LifetimeVector& v);

/// Integral over eta >= 0 of ln U(eta), U(eta) = #{l > eta}, evaluated by its
/// closed form -sum_{i<K} l_(i) ln(1 - 1/(K - i + 1)). Independent of the
/// largest lifetime. Needs K >= 1.
double alps(const LifetimeVector& v);

double longest_barcode(const LifetimeVector& v);
double mean_persistence(const LifetimeVector& v);

/// sum l^k; 0 for an empty vector.
double lifetime_power_sum(const LifetimeVector& v, int k);

/// Population central moment (1/K) sum (l - mean)^k.
double central_moment(const LifetimeVector& v, int k);

/// mean / sqrt(M2); needs K >= 2 and M2 > 0.
double snr(const LifetimeVector& v);

/// M3 / M2^(3/2); needs K >= 2 and M2 > 0.
double skewness(const LifetimeVector& v);

enum class Statistic { count, entropy, longest, mean, alps, l1, l2, snr, skew };

Statistic parse_statistic(std::string_view name);
std::string_view to_string(Statistic s);

/// Value of a statistic on a detection output. `count` is the number of
/// points; every other statistic is a function of the lifetimes.
double evaluate_statistic(Statistic s, const MarkedPointSet& points);
double evaluate_statistic(Statistic s, const LifetimeVector& v);

} // namespace cubetop
