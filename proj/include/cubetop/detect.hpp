#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cubetop/cubical.hpp"
#include "cubetop/image.hpp"

namespace cubetop {

struct MarkedPoint {
  Pixel location; // birth pixel p+ in frame coordinates
  double lifetime = 0.0;
};

struct MarkedPointSet {
  std::vector<MarkedPoint> points;
  std::optional<std::size_t> frame_index;
  double sigma = 0.0;
  std::optional<double> eta;
  RegionSpec region;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::vector<double> lifetimes() const;
};

struct DetectParams {
  RegionSpec region;
  double sigma = 0.0;
  /// Lifetime threshold; points with lifetime <= eta are dropped. Unset
  /// skips thresholding entirely, so zero-lifetime points are kept.
  std::optional<double> eta;
  InfiniteMode infinite_mode = InfiniteMode::max_pixel_value;
};

/// Column detection on one frame:
///   crop to the region's window -> smooth(sigma) -> PD0 of the window ->
///   resolve the infinite death -> keep pairs whose birth pixel lies in the
///   polygon -> keep lifetimes > eta.
/// The polygon may be empty, in which case every pixel of the window counts
/// as inside.
MarkedPointSet detect(const ImageFrame& frame, const DetectParams& params);

/// Detection on a frame that is already the processing window and already
/// smoothed. `mask` is the row-major polygon membership of the window.
MarkedPointSet detect_prepared(const ImageFrame& smoothed_window, std::span<const std::uint8_t> mask,
                               std::optional<double> eta, InfiniteMode mode);

inline std::size_t count_columns(const MarkedPointSet& points) { return points.size(); }

struct ThresholdResult {
  double threshold = 0.0;
  double objective = 0.0;
  ImageFrame binary; // 0 where I <= threshold, 1 elsewhere
};

/// Picks the pixel value t maximizing the total dim-0 persistence alive at t,
/// sum over PD0 of (d - b) [b <= t < d], with the infinite death set to the
/// frame maximum. Ties go to the smallest t.
ThresholdResult pd_threshold(const ImageFrame& frame);

/// Default eta for common smoothing levels: t(2) = 1, t(4) = 0.4, t(6) = 0.1.
std::optional<double> default_eta_for_sigma(double sigma);

/// CSV with columns x,y,lifetime.
std::string detections_to_csv(const MarkedPointSet& points);

} // namespace cubetop
