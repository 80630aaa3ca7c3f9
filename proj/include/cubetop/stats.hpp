#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cubetop/detect.hpp"
#include "cubetop/image.hpp"
#include "cubetop/summaries.hpp"

namespace cubetop {

// --- Poisson null model fitting and diagnostics ---------------------------

/// Maximum-likelihood Poisson rate of the vacuum window: the mean count over
/// all pixels of `vacuum` in all frames.
double fit_lambda(const ImageStack& stack, const PixelRect& vacuum);

/// All counts of `vacuum` across frames [first, last), frame-major.
std::vector<std::uint32_t> vacuum_counts(const ImageStack& stack, const PixelRect& vacuum, std::size_t first = 0,
                                         std::size_t last = static_cast<std::size_t>(-1));

/// Histogram of vacuum counts over all frames: entry c is the number of
/// (frame, pixel) samples equal to c.
std::vector<std::uint64_t> vacuum_histogram(const ImageStack& stack, const PixelRect& vacuum);

double poisson_cdf(std::uint64_t k, double mean);

/// sup over k in N0 of |F_sample(k) - F_Poisson(k)|, scanned up to the point
/// where both cdfs exceed 1 - 1e-12.
double poisson_ks_distance(std::span<const std::uint32_t> sample, double mean);
double poisson_ks_distance_histogram(std::span<const std::uint64_t> histogram, double mean);

/// min{1, 2 exp(-2 n ks^2)}.
double dkw_pvalue(double ks_distance, double sample_size);

struct DkwResult {
  double ks_distance = 0.0;
  double sample_size = 0.0;
  double p_value = 1.0;
};

/// KS distance of `sample` to Poisson(mean) and its DKW p-value. The sample
/// size in the exponent is explicit: the pooled count |U| N and the per-frame
/// |U| both appear in practice.
DkwResult dkw_test(std::span<const std::uint32_t> sample, double mean, double sample_size);

struct AutocorrelationResult {
  std::vector<double> mean_rho; // index h - 1 for lags h = 1..max_lag
  double null_sd = 0.0;         // 1 / sqrt(|U| N)
  std::size_t pixels_used = 0;
  std::size_t pixels_excluded = 0; // constant series, autocorrelation undefined
};

/// Per-pixel sample autocorrelation (biased, 1/N normalization) averaged over
/// the vacuum window. Entries are NaN when every series is constant.
AutocorrelationResult mean_autocorrelation(const ImageStack& stack, const PixelRect& vacuum, std::size_t max_lag);

struct SemivariogramBin {
  std::size_t lag = 0;   // l; distances in [4l/3, 4l/3 + 4/3)
  std::size_t pairs = 0; // unordered pairs in the bin
  std::optional<double> value;
};

/// Binned empirical semivariogram of `frame` over the window, l = 0..bins-1.
std::vector<SemivariogramBin> semivariogram(const ImageFrame& frame, const PixelRect& window, std::size_t bins);

// --- Monte Carlo tests -------------------------------------------------------

struct NullModel {
  enum class Kind { poisson, empirical };

  Kind kind = Kind::poisson;
  double mean = 0.0; // Poisson mean of a summed pixel, m * lambda
  std::shared_ptr<const std::vector<double>> pool;
  std::uint64_t seed = 0;

  static NullModel poisson(double mean, std::uint64_t seed);
  static NullModel empirical(std::vector<double> pool, std::uint64_t seed);
};

/// Values of I_{m, mk}(p) for k = 0..floor(N/m) - 1 and p in the vacuum window.
std::vector<double> empirical_pool(const ImageStack& stack, const PixelRect& vacuum, std::size_t m);

/// i.i.d. pixels from the null model. Pixel i of replicate r depends only on
/// (seed, r, i).
ImageFrame generate_null_image(const NullModel& model, int width, int height, std::uint64_t replicate);

/// sqrt(-ln(alpha/2) / (2n)) + 1/n.
double ci_halfwidth(double alpha, std::size_t n);

struct TestReport {
  std::string statistic;
  double observed = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  double alpha = 0.05;
  double ci_halfwidth = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// p = (1 + #{null >= observed}) / (n + 1) with its confidence interval.
TestReport mc_pvalue(double observed, std::span<const double> null_samples, double alpha = 0.05);

struct GofOptions {
  DetectParams detect;
  Statistic statistic = Statistic::count;
  std::size_t replicates = 9999;
  double alpha = 0.05;
  unsigned threads = 1;
};

/// Statistic of a detection result; undefined statistics map to -infinity
/// so they never count as at least as extreme as a defined value.
double statistic_or_lowest(Statistic s, const MarkedPointSet& points);

/// Null distribution of the statistic: `replicates` images of size
/// width x height drawn from `model`, each run through the detection pipeline
/// of `options.detect`, whose region is in the coordinates of that image.
/// Entry r is replicate r.
std::vector<double> simulate_null_statistics(int width, int height, const GofOptions& options, const NullModel& model);

/// Monte Carlo goodness-of-fit test of `frame` against `model`.
TestReport gof_test(const ImageFrame& frame, const GofOptions& options, const NullModel& model);

// --- Multiple testing ------------------------------------------------------

double harmonic_number(std::size_t n);

struct MultiTestRow {
  std::size_t k = 0;     // hypothesis position
  std::size_t index = 0; // caller label, e.g. the window start frame
  double p_value = 1.0;
  std::size_t rank = 0;  // 1-based, ties broken by position
  double threshold = 0.0;
  bool rejected = false;
};

struct MultiTestReport {
  std::vector<MultiTestRow> rows; // in hypothesis order
  double alpha = 0.05;
  std::size_t hypotheses = 0;
  double c_n = 1.0;
  std::size_t rejections = 0;

  std::string to_csv() const;
};

/// Step-up procedure with thresholds r alpha / (N C_N), C_N = sum_{k<=N} 1/k:
/// rejects the l smallest p-values, l = max{k : p_(k) <= k alpha / (N C_N)}.
MultiTestReport multi_test(std::span<const double> p_values, double alpha, std::span<const std::size_t> labels = {});

/// Same, with Monte Carlo p-values of each observed statistic computed
/// against one shared pool of null statistics.
MultiTestReport multi_test(std::span<const double> observed, std::span<const double> null_pool, double alpha,
                           std::span<const std::size_t> labels = {});

} // namespace cubetop
