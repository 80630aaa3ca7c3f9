#include "cubetop/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "cubetop/error.hpp"
#include "cubetop/random.hpp"

namespace cubetop {

void GroundTruthSpec::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("synthetic frame dimensions must be positive");
  if (!(dose > 0.0) || !std::isfinite(dose)) throw std::invalid_argument("dose must be finite and > 0");
  if (!(peak_width > 0.0) || !std::isfinite(peak_width)) throw std::invalid_argument("peak width must be finite and > 0");
  if (!(background >= 0.0) || !std::isfinite(background)) throw std::invalid_argument("background must be finite and >= 0");
  for (const auto& p : peaks) {
    if (!(p.amplitude > 0.0) || !std::isfinite(p.amplitude)) throw std::invalid_argument("peak amplitudes must be > 0");
    if (!(p.center.x >= 0.0 && p.center.x <= width - 1.0 && p.center.y >= 0.0 && p.center.y <= height - 1.0)) {
      throw std::invalid_argument("peak centers must lie inside the frame");
    }
  }
}

GroundTruthSpec GroundTruthSpec::lattice(int rows, int cols, double spacing, double margin,
                                         std::vector<double> amplitudes, double peak_width, double background,
                                         double dose) {
  if (amplitudes.empty()) throw std::invalid_argument("lattice needs at least one amplitude");
  GroundTruthSpec s;
  s.width = static_cast<int>(std::ceil(2.0 * margin + (cols - 1) * spacing)) + 1;
  s.height = static_cast<int>(std::ceil(2.0 * margin + (rows - 1) * spacing)) + 1;
  s.peak_width = peak_width;
  s.background = background;
  s.dose = dose;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double a = amplitudes[static_cast<std::size_t>(r * cols + c) % amplitudes.size()];
      s.peaks.push_back({{margin + c * spacing, margin + r * spacing}, a});
    }
  }
  s.validate();
  return s;
}

GroundTruthSpec ground_truth_from_json(const nlohmann::json& j) {
  GroundTruthSpec s;
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.peak_width = j.at("peak_width").get<double>();
  s.background = j.at("background").get<double>();
  s.dose = j.value("dose", 1.0);
  for (const auto& p : j.at("peaks")) {
    s.peaks.push_back({{p.at("x").get<double>(), p.at("y").get<double>()}, p.at("amplitude").get<double>()});
  }
  s.validate();
  return s;
}

nlohmann::json ground_truth_to_json(const GroundTruthSpec& spec) {
  nlohmann::json peaks = nlohmann::json::array();
  for (const auto& p : spec.peaks) peaks.push_back({{"x", p.center.x}, {"y", p.center.y}, {"amplitude", p.amplitude}});
  return {{"width", spec.width},         {"height", spec.height},   {"peak_width", spec.peak_width},
          {"background", spec.background}, {"dose", spec.dose}, {"peaks", peaks}};
}

ImageFrame render_truth(const GroundTruthSpec& spec) {
  spec.validate();
  ImageFrame out(spec.width, spec.height, spec.background);
  const double inv = 1.0 / (2.0 * spec.peak_width * spec.peak_width);
  const int reach = static_cast<int>(std::ceil(8.0 * spec.peak_width));
  for (const auto& p : spec.peaks) {
    const int cx = static_cast<int>(std::lround(p.center.x));
    const int cy = static_cast<int>(std::lround(p.center.y));
    for (int y = std::max(0, cy - reach); y <= std::min(spec.height - 1, cy + reach); ++y) {
      for (int x = std::max(0, cx - reach); x <= std::min(spec.width - 1, cx + reach); ++x) {
        const double dx = x - p.center.x;
        const double dy = y - p.center.y;
        out.at(x, y) -= p.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  return out;
}

ImageFrame add_shot_noise(const ImageFrame& truth, double dose, std::uint64_t seed, std::uint64_t stream) {
  if (!(dose > 0.0) || !std::isfinite(dose)) throw std::invalid_argument("dose must be finite and > 0");
  ImageFrame out(truth.width(), truth.height());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CounterRng rng(seed, stream, i);
    out[i] = static_cast<double>(poisson(rng, dose * truth[i]));
  }
  return out;
}

namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double directed(const std::vector<Point2>& from, const std::vector<Point2>& to) {
  double worst = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, distance(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

} // namespace

double hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Hausdorff distance needs two nonempty point sets");
  return std::max(directed(a, b), directed(b, a));
}

std::vector<Point2> locations(const MarkedPointSet& points) {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& p : points.points) out.push_back({static_cast<double>(p.location.x), static_cast<double>(p.location.y)});
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("Pearson correlation needs two samples of equal size >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedStatistic("Pearson correlation is undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double matched_intensity_correlation(const MarkedPointSet& a, const MarkedPointSet& b) {
  if (a.size() != b.size()) throw std::invalid_argument("matched correlation needs point sets of equal size");
  if (a.size() < 2) throw std::invalid_argument("matched correlation needs at least two points");

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  candidates.reserve(a.size() * b.size());
  const auto la = locations(a);
  const auto lb = locations(b);
  for (std::size_t i = 0; i < la.size(); ++i) {
    for (std::size_t j = 0; j < lb.size(); ++j) candidates.emplace_back(distance(la[i], lb[j]), i, j);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  std::vector<double> xa, xb;
  for (const auto& [d, i, j] : candidates) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = true;
    xa.push_back(a.points[i].lifetime);
    xb.push_back(b.points[j].lifetime);
  }
  return pearson(xa, xb);
}

} // namespace cubetop
