#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cubetop/detect.hpp"
#include "cubetop/image.hpp"

namespace cubetop {

struct SyntheticPeak {
  Point2 center; // pixel-center coordinates; pixel (x, y) has center (x, y)
  double amplitude = 1.0;
};

/// Dark Gaussian peaks on a flat background. Truth intensity at pixel p is
/// max(0, background - sum_k a_k exp(-|p - c_k|^2 / (2 width^2))); noisy
/// counts are Poisson(dose * truth).
struct GroundTruthSpec {
  int width = 0;
  int height = 0;
  std::vector<SyntheticPeak> peaks;
  double peak_width = 1.0; // sigma_g in pixels
  double background = 0.0;
  double dose = 1.0;

  void validate() const;

  /// Square lattice of rows x cols peaks with the given spacing and margin;
  /// amplitudes cycle through `amplitudes`.
  static GroundTruthSpec lattice(int rows, int cols, double spacing, double margin, std::vector<double> amplitudes,
                                 double peak_width, double background, double dose);
};

GroundTruthSpec ground_truth_from_json(const nlohmann::json& j);
nlohmann::json ground_truth_to_json(const GroundTruthSpec& spec);

ImageFrame render_truth(const GroundTruthSpec& spec);

/// Independent Poisson(dose * truth(p)) counts; pixel i depends only on
/// (seed, stream, i).
ImageFrame add_shot_noise(const ImageFrame& truth, double dose, std::uint64_t seed, std::uint64_t stream = 0);

/// Symmetric Hausdorff distance between two nonempty point sets.
double hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b);
std::vector<Point2> locations(const MarkedPointSet& points);

/// Pairs each point of `b` with an unmatched point of `a`, taking candidate
/// pairs in ascending distance order (ties by a index, then b index), and
/// returns the Pearson correlation of the matched lifetimes. Requires
/// |a| = |b| >= 2 and nonzero variance on both sides.
double matched_intensity_correlation(const MarkedPointSet& a, const MarkedPointSet& b);

/// Pearson correlation; throws UndefinedStatistic on zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

} // namespace cubetop
