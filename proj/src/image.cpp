#include "cubetop/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cubetop {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("frame dimensions must be positive, got " + std::to_string(width) + "x" +
                                std::to_string(height));
  }
}

} // namespace

ImageFrame::ImageFrame(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  if (!std::isfinite(fill) || fill < 0.0) throw std::invalid_argument("pixel values must be finite and >= 0");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ImageFrame::ImageFrame(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("pixel buffer size does not match frame dimensions");
  }
  for (double v : pixels_) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("pixel values must be finite and >= 0");
  }
}

double ImageFrame::min_value() const { return *std::min_element(pixels_.begin(), pixels_.end()); }
double ImageFrame::max_value() const { return *std::max_element(pixels_.begin(), pixels_.end()); }

ImageStack::ImageStack(int width, int height) : width_(width), height_(height) { check_dims(width, height); }

void ImageStack::push_back(std::vector<std::uint16_t> counts) {
  if (counts.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw std::invalid_argument("frame size does not match stack dimensions");
  }
  frames_.push_back(std::move(counts));
}

void ImageStack::push_back(const ImageFrame& frame) {
  if (frame.width() != width_ || frame.height() != height_) {
    throw std::invalid_argument("frame dimensions do not match stack dimensions");
  }
  std::vector<std::uint16_t> counts(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    double v = frame[i];
    if (v != std::floor(v) || v > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("stack frames hold integer counts in [0, 65535]");
    }
    counts[i] = static_cast<std::uint16_t>(v);
  }
  frames_.push_back(std::move(counts));
}

ImageFrame ImageStack::frame(std::size_t k) const {
  const auto& c = frames_.at(k);
  return ImageFrame(width_, height_, std::vector<double>(c.begin(), c.end()));
}

ImageFrame sum_frames(const ImageStack& stack, std::size_t m, std::size_t ell) {
  if (m < 1) throw std::invalid_argument("window length m must be >= 1");
  if (ell + m > stack.frame_count()) {
    throw std::out_of_range("window [" + std::to_string(ell) + ", " + std::to_string(ell + m) +
                            ") exceeds stack of " + std::to_string(stack.frame_count()) + " frames");
  }
  std::vector<std::uint64_t> acc(static_cast<std::size_t>(stack.width()) * static_cast<std::size_t>(stack.height()), 0);
  for (std::size_t k = ell; k < ell + m; ++k) {
    auto c = stack.counts(k);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c[i];
  }
  return ImageFrame(stack.width(), stack.height(), std::vector<double>(acc.begin(), acc.end()));
}

ImageFrame crop(const ImageFrame& frame, const PixelRect& rect) {
  if (rect.empty() || rect.x0 < 0 || rect.y0 < 0 || rect.x1 > frame.width() || rect.y1 > frame.height()) {
    throw std::invalid_argument("crop rectangle must be non-empty and inside the frame");
  }
  ImageFrame out(rect.width(), rect.height());
  for (int y = rect.y0; y < rect.y1; ++y) {
    for (int x = rect.x0; x < rect.x1; ++x) out.at(x - rect.x0, y - rect.y0) = frame.at(x, y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regions

RegionSpec RegionSpec::whole_frame(int width, int height) {
  RegionSpec r;
  r.polygon = {{0.0, 0.0}, {double(width), 0.0}, {double(width), double(height)}, {0.0, double(height)}};
  r.rect = PixelRect{0, 0, width, height};
  return r;
}

RegionSpec RegionSpec::from_rect(const PixelRect& rect) {
  RegionSpec r;
  r.polygon = {{double(rect.x0), double(rect.y0)},
               {double(rect.x1), double(rect.y0)},
               {double(rect.x1), double(rect.y1)},
               {double(rect.x0), double(rect.y1)}};
  r.rect = rect;
  return r;
}

PixelRect RegionSpec::window(int width, int height) const {
  PixelRect w;
  if (rect) {
    w = *rect;
  } else if (!polygon.empty()) {
    double minx = polygon[0].x, maxx = polygon[0].x, miny = polygon[0].y, maxy = polygon[0].y;
    for (const auto& p : polygon) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    w = {static_cast<int>(std::floor(minx)), static_cast<int>(std::floor(miny)), static_cast<int>(std::ceil(maxx)),
         static_cast<int>(std::ceil(maxy))};
  } else {
    w = {0, 0, width, height};
  }
  w.x0 = std::clamp(w.x0, 0, width);
  w.x1 = std::clamp(w.x1, 0, width);
  w.y0 = std::clamp(w.y0, 0, height);
  w.y1 = std::clamp(w.y1, 0, height);
  return w;
}

RegionSpec RegionSpec::shifted(int dx, int dy) const {
  RegionSpec r = *this;
  for (auto& p : r.polygon) {
    p.x -= dx;
    p.y -= dy;
  }
  if (r.rect) *r.rect = {r.rect->x0 - dx, r.rect->y0 - dy, r.rect->x1 - dx, r.rect->y1 - dy};
  return r;
}

namespace {

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(Point2 p, Point2 a, Point2 b) {
  return cross(a, b, p) == 0.0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  int d1 = sign(cross(c, d, a)), d2 = sign(cross(c, d, b));
  int d3 = sign(cross(a, b, c)), d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
         (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

bool strictly_inside(std::span<const Point2> poly, Point2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    Point2 a = poly[j], b = poly[i];
    if (on_segment(p, a, b)) return false;
    if ((a.y > p.y) != (b.y > p.y)) {
      double xi = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xi) inside = !inside;
    }
  }
  return inside;
}

} // namespace

void validate_polygon(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % n];
    if (!std::isfinite(a.x) || !std::isfinite(a.y)) throw std::invalid_argument("polygon vertex is not finite");
    area2 += a.x * b.y - b.x * a.y;
  }
  if (area2 == 0.0) throw std::invalid_argument("degenerate polygon (zero area)");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n])) {
        throw std::invalid_argument("polygon is self-intersecting");
      }
    }
  }
}

std::vector<Pixel> pixels_in_polygon(std::span<const Point2> polygon, int width, int height) {
  validate_polygon(polygon);
  RegionSpec r;
  r.polygon.assign(polygon.begin(), polygon.end());
  PixelRect box = r.window(width, height);
  std::vector<Pixel> out;
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      if (strictly_inside(polygon, {x + 0.5, y + 0.5})) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<std::uint8_t> polygon_mask(std::span<const Point2> polygon, int width, int height) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  for (Pixel p : pixels_in_polygon(polygon, width, height)) {
    mask[static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(p.x)] = 1;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Smoothing

GaussianKernel::GaussianKernel(double sigma, std::optional<int> radius) : sigma_(sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) throw std::invalid_argument("sigma must be finite and >= 0");
  if (sigma == 0.0) {
    radius_ = 0;
    profile_ = {1.0};
    return;
  }
  radius_ = radius ? *radius : static_cast<int>(std::ceil(4.0 * sigma));
  if (radius_ < 0) throw std::invalid_argument("kernel radius must be >= 0");
  profile_.resize(static_cast<std::size_t>(2 * radius_ + 1));
  double total = 0.0;
  for (int i = -radius_; i <= radius_; ++i) {
    double w = std::exp(-double(i) * double(i) / (2.0 * sigma * sigma));
    profile_[static_cast<std::size_t>(i + radius_)] = w;
    total += w;
  }
  for (double& w : profile_) w /= total;
}

std::vector<double> GaussianKernel::weights() const {
  const int n = 2 * radius_ + 1;
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int dy = -radius_; dy <= radius_; ++dy) {
    for (int dx = -radius_; dx <= radius_; ++dx) {
      out[static_cast<std::size_t>((dy + radius_) * n + (dx + radius_))] = weight(dx, dy);
    }
  }
  return out;
}

namespace {

// One separable pass along rows (horizontal) or columns. The in-frame part
// of a product kernel is a rectangle, so renormalizing each pass by its own
// in-frame mass equals renormalizing the 2D kernel.
void convolve_1d(std::span<const double> in, std::span<double> out, int width, int height,
                 std::span<const double> w, int r, bool horizontal) {
  const int len = horizontal ? width : height;
  const int lines = horizontal ? height : width;
  const std::size_t stride = horizontal ? 1 : static_cast<std::size_t>(width);
  std::vector<double> line(static_cast<std::size_t>(len));
  for (int l = 0; l < lines; ++l) {
    const std::size_t base = horizontal ? static_cast<std::size_t>(l) * static_cast<std::size_t>(width)
                                        : static_cast<std::size_t>(l);
    for (int i = 0; i < len; ++i) line[static_cast<std::size_t>(i)] = in[base + static_cast<std::size_t>(i) * stride];
    for (int i = 0; i < len; ++i) {
      const int lo = std::max(-r, -i);
      const int hi = std::min(r, len - 1 - i);
      double acc = 0.0, mass = 0.0;
      for (int k = lo; k <= hi; ++k) {
        const double wk = w[static_cast<std::size_t>(k + r)];
        acc += wk * line[static_cast<std::size_t>(i + k)];
        mass += wk;
      }
      out[base + static_cast<std::size_t>(i) * stride] = acc / mass;
    }
  }
}

} // namespace

ImageFrame smooth(const ImageFrame& frame, double sigma, std::optional<int> radius) {
  GaussianKernel kernel(sigma, radius);
  if (kernel.radius() == 0) return frame;
  ImageFrame tmp(frame.width(), frame.height());
  ImageFrame out(frame.width(), frame.height());
  convolve_1d(frame.pixels(), tmp.pixels(), frame.width(), frame.height(), kernel.profile(), kernel.radius(), true);
  convolve_1d(tmp.pixels(), out.pixels(), frame.width(), frame.height(), kernel.profile(), kernel.radius(), false);
  // Every output is a convex combination of inputs; clamp away round-off.
  const double lo = frame.min_value(), hi = frame.max_value();
  for (double& v : out.pixels()) v = std::clamp(v, lo, hi);
  return out;
}

} // namespace cubetop
