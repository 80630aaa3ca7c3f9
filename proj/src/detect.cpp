#include "cubetop/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cubetop/format.hpp"

namespace cubetop {

std::vector<double> MarkedPointSet::lifetimes() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.lifetime);
  return out;
}

MarkedPointSet detect_prepared(const ImageFrame& smoothed_window, std::span<const std::uint8_t> mask,
                               std::optional<double> eta, InfiniteMode mode) {
  if (eta && (!std::isfinite(*eta) || *eta < 0.0)) throw std::invalid_argument("eta must be finite and >= 0");
  const PersistenceDiagram pd = resolve_infinite(compute_pd0(smoothed_window), mode, smoothed_window);
  MarkedPointSet out;
  out.eta = eta;
  for (const auto& pair : pd.pairs()) {
    const Pixel p = pair.birth_pixel;
    if (!mask.empty() && !mask[smoothed_window.index(p.x, p.y)]) continue;
    const double l = pair.lifetime();
    if (eta && !(l > *eta)) continue;
    out.points.push_back({p, l});
  }
  return out;
}

MarkedPointSet detect(const ImageFrame& frame, const DetectParams& params) {
  if (!std::isfinite(params.sigma) || params.sigma < 0.0) throw std::invalid_argument("sigma must be finite and >= 0");
  const PixelRect win = params.region.window(frame.width(), frame.height());
  if (win.empty()) throw std::invalid_argument("region does not intersect the frame");

  const ImageFrame window = smooth(crop(frame, win), params.sigma);
  std::vector<std::uint8_t> mask;
  if (!params.region.polygon.empty()) {
    const RegionSpec local = params.region.shifted(win.x0, win.y0);
    mask = polygon_mask(local.polygon, win.width(), win.height());
  }
  MarkedPointSet out = detect_prepared(window, mask, params.eta, params.infinite_mode);
  for (auto& p : out.points) {
    p.location.x += win.x0;
    p.location.y += win.y0;
  }
  out.sigma = params.sigma;
  out.region = params.region;
  return out;
}

ThresholdResult pd_threshold(const ImageFrame& frame) {
  const PersistenceDiagram pd = resolve_infinite(compute_pd0(frame), InfiniteMode::max_pixel_value, frame);

  std::vector<double> candidates(frame.pixels().begin(), frame.pixels().end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // Difference array over candidate positions: a pair contributes on the
  // candidates t with b <= t < d.
  std::vector<double> delta(candidates.size() + 1, 0.0);
  for (const auto& p : pd.pairs()) {
    const double l = p.lifetime();
    if (l <= 0.0) continue;
    const auto lo = std::lower_bound(candidates.begin(), candidates.end(), p.birth) - candidates.begin();
    const auto hi = std::lower_bound(candidates.begin(), candidates.end(), p.death) - candidates.begin();
    delta[static_cast<std::size_t>(lo)] += l;
    delta[static_cast<std::size_t>(hi)] -= l;
  }
  ThresholdResult best{candidates.front(), -1.0, {}};
  double running = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    running += delta[i];
    if (running > best.objective) {
      best.objective = running;
      best.threshold = candidates[i];
    }
  }
  best.objective = std::max(best.objective, 0.0);
  best.binary = ImageFrame(frame.width(), frame.height());
  for (std::size_t i = 0; i < frame.size(); ++i) best.binary[i] = frame[i] <= best.threshold ? 0.0 : 1.0;
  return best;
}

std::optional<double> default_eta_for_sigma(double sigma) {
  static const std::map<double, double> table{{2.0, 1.0}, {4.0, 0.4}, {6.0, 0.1}};
  if (auto it = table.find(sigma); it != table.end()) return it->second;
  return std::nullopt;
}

std::string detections_to_csv(const MarkedPointSet& points) {
  std::ostringstream out;
  out << "x,y,lifetime\n";
  for (const auto& p : points.points) out << p.location.x << ',' << p.location.y << ',' << format_real(p.lifetime) << '\n';
  return out.str();
}

} // namespace cubetop
