#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cubetop {

/// Integer pixel coordinate; x is the column, y the row.
struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  // Row-major order: lexicographic in (y, x).
  friend auto operator<=>(const Pixel& a, const Pixel& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

/// Half-open integer rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  std::size_t area() const {
    return empty() ? 0 : static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }
  bool contains(Pixel p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// A single grayscale frame. Raw frames hold integer counts; smoothed frames
/// hold reals. All values are finite and nonnegative.
class ImageFrame {
public:
  ImageFrame() = default;
  ImageFrame(int width, int height, double fill = 0.0);
  ImageFrame(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double at(int x, int y) const { return pixels_[index(x, y)]; }
  double& at(int x, int y) { return pixels_[index(x, y)]; }
  double operator[](std::size_t i) const { return pixels_[i]; }
  double& operator[](std::size_t i) { return pixels_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  Pixel pixel(std::size_t i) const {
    return {static_cast<int>(i % static_cast<std::size_t>(width_)),
            static_cast<int>(i / static_cast<std::size_t>(width_))};
  }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  PixelRect bounds() const { return {0, 0, width_, height_}; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  double min_value() const;
  double max_value() const;

  friend bool operator==(const ImageFrame&, const ImageFrame&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// An ordered series of equally sized raw frames stored as 16-bit counts.
class ImageStack {
public:
  ImageStack(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t frame_count() const { return frames_.size(); }

  void push_back(std::vector<std::uint16_t> counts);
  void push_back(const ImageFrame& frame);

  std::span<const std::uint16_t> counts(std::size_t k) const { return frames_.at(k); }
  ImageFrame frame(std::size_t k) const;

private:
  int width_;
  int height_;
  std::vector<std::vector<std::uint16_t>> frames_;
};

/// Pixelwise sum of frames [ell, ell + m) (0-based ell).
ImageFrame sum_frames(const ImageStack& stack, std::size_t m, std::size_t ell);

/// Copy of the pixels inside `rect`, re-indexed from (rect.x0, rect.y0).
ImageFrame crop(const ImageFrame& frame, const PixelRect& rect);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Polygonal region R and/or rectangular window in pixel coordinates.
/// Either part may be absent; at least one is required by consumers.
struct RegionSpec {
  std::vector<Point2> polygon;
  std::optional<PixelRect> rect;

  static RegionSpec whole_frame(int width, int height);
  static RegionSpec from_rect(const PixelRect& rect);

  /// Processing window: `rect` if present, otherwise the polygon's bounding
  /// box, clipped to the frame. Empty if the region misses the frame.
  PixelRect window(int width, int height) const;

  /// Translate polygon and rect by (-dx, -dy).
  RegionSpec shifted(int dx, int dy) const;
};

/// Throws std::invalid_argument unless the polygon has >= 3 vertices, nonzero
/// area and no self-intersections.
void validate_polygon(std::span<const Point2> polygon);

/// Pixels whose centers (x + 0.5, y + 0.5) lie strictly inside the polygon
/// (even-odd rule; centers on an edge are outside), in row-major order.
std::vector<Pixel> pixels_in_polygon(std::span<const Point2> polygon, int width, int height);

/// Row-major membership mask of `pixels_in_polygon`.
std::vector<std::uint8_t> polygon_mask(std::span<const Point2> polygon, int width, int height);

class GaussianKernel {
public:
  /// radius defaults to ceil(4 sigma).
  explicit GaussianKernel(double sigma, std::optional<int> radius = std::nullopt);

  double sigma() const { return sigma_; }
  int radius() const { return radius_; }
  /// Normalized 1D profile w(-r..r); the 2D kernel is its outer product.
  std::span<const double> profile() const { return profile_; }
  /// 2D weight at offset (dx, dy), |dx|, |dy| <= radius.
  double weight(int dx, int dy) const { return profile_[dx + radius_] * profile_[dy + radius_]; }
  /// Full (2r+1)^2 grid, row-major.
  std::vector<double> weights() const;

private:
  double sigma_;
  int radius_;
  std::vector<double> profile_;
};

/// Discrete Gaussian smoothing. Pixels outside the frame are treated as
/// absent: each output pixel is divided by the kernel mass that falls inside
/// the frame, so constant frames stay constant up to the border.
/// sigma == 0 returns the frame unchanged.
ImageFrame smooth(const ImageFrame& frame, double sigma, std::optional<int> radius = std::nullopt);

} // namespace cubetop
