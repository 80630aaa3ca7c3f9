#include "cubetop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cubetop/error.hpp"
#include "cubetop/format.hpp"
#include "cubetop/parallel.hpp"
#include "cubetop/random.hpp"

namespace cubetop {

namespace {

PixelRect checked_window(const ImageStack& stack, const PixelRect& vacuum) {
  const PixelRect frame{0, 0, stack.width(), stack.height()};
  if (vacuum.empty() || vacuum.x0 < frame.x0 || vacuum.y0 < frame.y0 || vacuum.x1 > frame.x1 ||
      vacuum.y1 > frame.y1) {
    throw std::invalid_argument("vacuum window must be a nonempty rectangle inside the frame");
  }
  return vacuum;
}

} // namespace

double fit_lambda(const ImageStack& stack, const PixelRect& vacuum) {
  checked_window(stack, vacuum);
  if (stack.frame_count() == 0) throw std::invalid_argument("cannot fit lambda on an empty stack");
  long double total = 0.0L;
  for (std::size_t k = 0; k < stack.frame_count(); ++k) {
    const auto c = stack.counts(k);
    for (int y = vacuum.y0; y < vacuum.y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(stack.width());
      for (int x = vacuum.x0; x < vacuum.x1; ++x) total += c[row + static_cast<std::size_t>(x)];
    }
  }
  return static_cast<double>(total / (static_cast<long double>(vacuum.area()) * stack.frame_count()));
}

std::vector<std::uint32_t> vacuum_counts(const ImageStack& stack, const PixelRect& vacuum, std::size_t first,
                                         std::size_t last) {
  checked_window(stack, vacuum);
  last = std::min(last, stack.frame_count());
  std::vector<std::uint32_t> out;
  if (first >= last) return out;
  out.reserve(static_cast<std::size_t>(vacuum.area()) * (last - first));
  for (std::size_t k = first; k < last; ++k) {
    const auto c = stack.counts(k);
    for (int y = vacuum.y0; y < vacuum.y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(stack.width());
      for (int x = vacuum.x0; x < vacuum.x1; ++x) out.push_back(c[row + static_cast<std::size_t>(x)]);
    }
  }
  return out;
}

namespace {

double poisson_pmf(std::uint64_t k, double mean) {
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

} // namespace

double poisson_cdf(std::uint64_t k, double mean) {
  if (!std::isfinite(mean) || mean < 0.0) throw std::invalid_argument("Poisson mean must be finite and >= 0");
  double acc = 0.0;
  for (std::uint64_t i = 0; i <= k; ++i) acc += poisson_pmf(i, mean);
  return std::min(acc, 1.0);
}

double poisson_ks_distance(std::span<const std::uint32_t> sample, double mean) {
  if (sample.empty()) throw std::invalid_argument("KS distance needs a nonempty sample");
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(*std::max_element(sample.begin(), sample.end())) + 1, 0);
  for (std::uint32_t c : sample) ++hist[c];
  return poisson_ks_distance_histogram(hist, mean);
}

double poisson_ks_distance_histogram(std::span<const std::uint64_t> hist, double mean) {
  if (!std::isfinite(mean) || mean < 0.0) throw std::invalid_argument("Poisson mean must be finite and >= 0");
  std::uint64_t total = 0;
  for (std::uint64_t h : hist) total += h;
  if (total == 0) throw std::invalid_argument("KS distance needs a nonempty sample");

  const double n = static_cast<double>(total);
  constexpr double tail = 1.0 - 1e-12;
  double f_model = 0.0;
  std::uint64_t cumulative = 0;
  double sup = 0.0;
  // Past the largest observed count the sample cdf is 1; stop once the model
  // cdf is within the tail cutoff as well.
  for (std::uint64_t k = 0;; ++k) {
    if (k < hist.size()) cumulative += hist[k];
    const double f_sample = static_cast<double>(cumulative) / n;
    f_model = std::min(1.0, f_model + poisson_pmf(k, mean));
    sup = std::max(sup, std::abs(f_sample - f_model));
    if (k + 1 >= hist.size() && f_model > tail) break;
  }
  return sup;
}

std::vector<std::uint64_t> vacuum_histogram(const ImageStack& stack, const PixelRect& vacuum) {
  checked_window(stack, vacuum);
  std::vector<std::uint64_t> hist;
  for (std::size_t k = 0; k < stack.frame_count(); ++k) {
    const auto c = stack.counts(k);
    for (int y = vacuum.y0; y < vacuum.y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(stack.width());
      for (int x = vacuum.x0; x < vacuum.x1; ++x) {
        const std::uint16_t v = c[row + static_cast<std::size_t>(x)];
        if (v >= hist.size()) hist.resize(static_cast<std::size_t>(v) + 1, 0);
        ++hist[v];
      }
    }
  }
  return hist;
}

double dkw_pvalue(double ks_distance, double sample_size) {
  if (!(ks_distance >= 0.0) || !(sample_size > 0.0)) {
    throw std::invalid_argument("DKW p-value needs ks >= 0 and a positive sample size");
  }
  return std::min(1.0, 2.0 * std::exp(-2.0 * sample_size * ks_distance * ks_distance));
}

DkwResult dkw_test(std::span<const std::uint32_t> sample, double mean, double sample_size) {
  DkwResult r;
  r.ks_distance = poisson_ks_distance(sample, mean);
  r.sample_size = sample_size;
  r.p_value = dkw_pvalue(r.ks_distance, sample_size);
  return r;
}

AutocorrelationResult mean_autocorrelation(const ImageStack& stack, const PixelRect& vacuum, std::size_t max_lag) {
  checked_window(stack, vacuum);
  const std::size_t n = stack.frame_count();
  if (max_lag == 0 || max_lag >= n) throw std::invalid_argument("max_lag must be in [1, number of frames)");

  AutocorrelationResult out;
  out.mean_rho.assign(max_lag, 0.0);
  out.null_sd = 1.0 / std::sqrt(static_cast<double>(vacuum.area()) * static_cast<double>(n));

  std::vector<double> series(n);
  std::vector<double> sums(max_lag, 0.0);
  for (int y = vacuum.y0; y < vacuum.y1; ++y) {
    for (int x = vacuum.x0; x < vacuum.x1; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(stack.width()) +
                              static_cast<std::size_t>(x);
      double mean = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        series[k] = stack.counts(k)[idx];
        mean += series[k];
      }
      mean /= static_cast<double>(n);
      double c0 = 0.0;
      for (double& v : series) {
        v -= mean;
        c0 += v * v;
      }
      if (!(c0 > 0.0)) {
        ++out.pixels_excluded;
        continue;
      }
      ++out.pixels_used;
      for (std::size_t h = 1; h <= max_lag; ++h) {
        double ch = 0.0;
        for (std::size_t k = 0; k + h < n; ++k) ch += series[k] * series[k + h];
        sums[h - 1] += ch / c0;
      }
    }
  }
  // With every series constant the mean is undefined; report NaN.
  for (std::size_t h = 0; h < max_lag; ++h) {
    out.mean_rho[h] = out.pixels_used == 0 ? std::numeric_limits<double>::quiet_NaN()
                                           : sums[h] / static_cast<double>(out.pixels_used);
  }
  return out;
}

std::vector<SemivariogramBin> semivariogram(const ImageFrame& frame, const PixelRect& window, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("semivariogram needs at least one bin");
  if (window.empty() || window.x0 < 0 || window.y0 < 0 || window.x1 > frame.width() || window.y1 > frame.height()) {
    throw std::invalid_argument("semivariogram window must be a nonempty rectangle inside the frame");
  }
  // Bin of squared distance d2: the largest l with 4l/3 <= sqrt(d2), i.e.
  // 16 l^2 <= 9 d2, computed in integers so bin edges are exact.
  auto bin_of = [](long long d2) {
    long long l = static_cast<long long>(std::floor(0.75 * std::sqrt(static_cast<double>(d2))));
    while (16 * (l + 1) * (l + 1) <= 9 * d2) ++l;
    while (l > 0 && 16 * l * l > 9 * d2) --l;
    return l;
  };
  const long long max_l = static_cast<long long>(bins) - 1;
  const int reach = static_cast<int>(std::ceil(4.0 * static_cast<double>(bins) / 3.0));

  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (int dy = 0; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (dy == 0 && dx <= 0) continue; // one offset per unordered pair
      const long long d2 = static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
      const long long l = bin_of(d2);
      if (l > max_l) continue;
      for (int y = window.y0; y + dy < window.y1; ++y) {
        for (int x = std::max(window.x0, window.x0 - dx); x < std::min(window.x1, window.x1 - dx); ++x) {
          const double diff = frame.at(x, y) - frame.at(x + dx, y + dy);
          sum[static_cast<std::size_t>(l)] += diff * diff;
          ++count[static_cast<std::size_t>(l)];
        }
      }
    }
  }
  std::vector<SemivariogramBin> out(bins);
  for (std::size_t l = 0; l < bins; ++l) {
    out[l].lag = l;
    out[l].pairs = count[l];
    if (count[l] > 0) out[l].value = sum[l] / (2.0 * static_cast<double>(count[l]));
  }
  return out;
}

NullModel NullModel::poisson(double mean, std::uint64_t seed) {
  if (!std::isfinite(mean) || mean < 0.0) throw std::invalid_argument("Poisson null mean must be finite and >= 0");
  NullModel m;
  m.kind = Kind::poisson;
  m.mean = mean;
  m.seed = seed;
  return m;
}

NullModel NullModel::empirical(std::vector<double> pool, std::uint64_t seed) {
  if (pool.empty()) throw std::invalid_argument("empirical null pool is empty");
  NullModel m;
  m.kind = Kind::empirical;
  m.pool = std::make_shared<const std::vector<double>>(std::move(pool));
  m.seed = seed;
  return m;
}

std::vector<double> empirical_pool(const ImageStack& stack, const PixelRect& vacuum, std::size_t m) {
  checked_window(stack, vacuum);
  if (m == 0) throw std::invalid_argument("m must be >= 1");
  const std::size_t blocks = stack.frame_count() / m;
  if (blocks == 0) throw std::invalid_argument("stack has fewer than m frames");
  std::vector<double> pool;
  pool.reserve(blocks * static_cast<std::size_t>(vacuum.area()));
  for (std::size_t k = 0; k < blocks; ++k) {
    const ImageFrame f = sum_frames(stack, m, m * k);
    for (int y = vacuum.y0; y < vacuum.y1; ++y) {
      for (int x = vacuum.x0; x < vacuum.x1; ++x) pool.push_back(f.at(x, y));
    }
  }
  return pool;
}

ImageFrame generate_null_image(const NullModel& model, int width, int height, std::uint64_t replicate) {
  ImageFrame out(width, height);
  const std::optional<PoissonSampler> sampler =
      model.kind == NullModel::Kind::poisson ? std::optional<PoissonSampler>(model.mean) : std::nullopt;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CounterRng rng(model.seed, replicate, i);
    if (sampler) {
      out[i] = static_cast<double>((*sampler)(rng));
    } else {
      const auto& pool = *model.pool;
      out[i] = pool[rng.below(pool.size())];
    }
  }
  return out;
}

double ci_halfwidth(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0) || n == 0) throw std::invalid_argument("need 0 < alpha < 1 and n >= 1");
  const double nd = static_cast<double>(n);
  return std::sqrt(-std::log(alpha / 2.0) / (2.0 * nd)) + 1.0 / nd;
}

nlohmann::json TestReport::to_json() const {
  nlohmann::json j;
  j["statistic"] = statistic;
  if (std::isfinite(observed)) {
    j["observed"] = observed;
  } else {
    j["observed"] = nullptr; // statistic undefined on the observed frame
  }
  j["p_value"] = p_value;
  j["n"] = n;
  j["alpha"] = alpha;
  j["ci_halfwidth"] = ci_halfwidth;
  j["ci"] = {ci_low, ci_high};
  j["seed"] = seed;
  return j;
}

TestReport mc_pvalue(double observed, std::span<const double> null_samples, double alpha) {
  if (null_samples.empty()) throw std::invalid_argument("Monte Carlo p-value needs at least one null sample");
  if (std::isnan(observed)) throw std::invalid_argument("observed statistic is NaN");
  std::size_t extreme = 0;
  for (double t : null_samples) {
    if (std::isnan(t)) throw std::invalid_argument("null statistic is NaN");
    if (t >= observed) ++extreme;
  }
  TestReport r;
  r.observed = observed;
  r.n = null_samples.size();
  r.alpha = alpha;
  r.p_value = (1.0 + static_cast<double>(extreme)) / (static_cast<double>(r.n) + 1.0);
  r.ci_halfwidth = ci_halfwidth(alpha, r.n);
  r.ci_low = std::max(0.0, r.p_value - r.ci_halfwidth);
  r.ci_high = std::min(1.0, r.p_value + r.ci_halfwidth);
  return r;
}

double statistic_or_lowest(Statistic s, const MarkedPointSet& points) {
  try {
    return evaluate_statistic(s, points);
  } catch (const UndefinedStatistic&) {
    return -std::numeric_limits<double>::infinity();
  }
}

std::vector<double> simulate_null_statistics(int width, int height, const GofOptions& options, const NullModel& model) {
  if (options.replicates == 0) throw std::invalid_argument("need at least one null replicate");
  const DetectParams& params = options.detect;
  if (!std::isfinite(params.sigma) || params.sigma < 0.0) throw std::invalid_argument("sigma must be finite and >= 0");
  const PixelRect win = params.region.window(width, height);
  if (win.x0 != 0 || win.y0 != 0 || win.x1 != width || win.y1 != height) {
    throw std::invalid_argument("null images must have the size of the processing window");
  }
  std::vector<std::uint8_t> mask;
  if (!params.region.polygon.empty()) mask = polygon_mask(params.region.polygon, width, height);

  std::vector<double> out(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t r) {
    const ImageFrame img = smooth(generate_null_image(model, width, height, r), params.sigma);
    out[r] = statistic_or_lowest(options.statistic, detect_prepared(img, mask, params.eta, params.infinite_mode));
  });
  return out;
}

TestReport gof_test(const ImageFrame& frame, const GofOptions& options, const NullModel& model) {
  const PixelRect win = options.detect.region.window(frame.width(), frame.height());
  if (win.empty()) throw std::invalid_argument("region does not intersect the frame");

  // Observed and null images go through the identical pipeline on a frame the
  // size of the processing window.
  GofOptions local = options;
  local.detect.region = options.detect.region.shifted(win.x0, win.y0);
  local.detect.region.rect = PixelRect{0, 0, win.width(), win.height()};
  const ImageFrame window = crop(frame, win);

  const double observed = statistic_or_lowest(options.statistic, detect(window, local.detect));
  const std::vector<double> null = simulate_null_statistics(win.width(), win.height(), local, model);

  TestReport r = mc_pvalue(observed, null, options.alpha);
  r.statistic = std::string(to_string(options.statistic));
  r.seed = model.seed;
  return r;
}

double harmonic_number(std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = n; k >= 1; --k) acc += 1.0 / static_cast<double>(k);
  return acc;
}

MultiTestReport multi_test(std::span<const double> p_values, double alpha, std::span<const std::size_t> labels) {
  if (p_values.empty()) throw std::invalid_argument("multiple test needs at least one p-value");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!labels.empty() && labels.size() != p_values.size()) {
    throw std::invalid_argument("labels and p-values differ in length");
  }
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-values must lie in [0, 1]");
  }

  MultiTestReport rep;
  rep.alpha = alpha;
  rep.hypotheses = p_values.size();
  rep.c_n = harmonic_number(rep.hypotheses);
  const double n = static_cast<double>(rep.hypotheses);

  std::vector<std::size_t> order(p_values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  rep.rows.resize(p_values.size());
  std::size_t largest = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t k = order[r];
    MultiTestRow& row = rep.rows[k];
    row.k = k;
    row.index = labels.empty() ? k : labels[k];
    row.p_value = p_values[k];
    row.rank = r + 1;
    row.threshold = static_cast<double>(r + 1) * alpha / (n * rep.c_n);
    if (row.p_value <= row.threshold) largest = r + 1;
  }
  for (auto& row : rep.rows) row.rejected = row.rank <= largest;
  rep.rejections = largest;
  return rep;
}

MultiTestReport multi_test(std::span<const double> observed, std::span<const double> null_pool, double alpha,
                           std::span<const std::size_t> labels) {
  if (null_pool.empty()) throw std::invalid_argument("null pool is empty");
  std::vector<double> sorted(null_pool.begin(), null_pool.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> p(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const auto extreme = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), observed[i]);
    p[i] = (1.0 + static_cast<double>(extreme)) / (n + 1.0);
  }
  return multi_test(p, alpha, labels);
}

std::string MultiTestReport::to_csv() const {
  std::ostringstream out;
  out << "k,index,p_value,rank,threshold,rejected\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.index << ',' << format_real(r.p_value) << ',' << r.rank << ',' << format_real(r.threshold)
        << ',' << (r.rejected ? "true" : "false") << '\n';
  }
  return out.str();
}

} // namespace cubetop
