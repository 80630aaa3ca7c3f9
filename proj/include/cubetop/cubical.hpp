#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubetop/image.hpp"

namespace cubetop {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Elementary cube in doubled ("Khalimsky") coordinates: pixel (x, y) is the
/// 2-cube (2x+1, 2y+1); a coordinate is odd along each nondegenerate axis.
struct CellId {
  int x = 0;
  int y = 0;

  int dim() const { return (x & 1) + (y & 1); }
  static CellId of_pixel(Pixel p) { return {2 * p.x + 1, 2 * p.y + 1}; }

  friend bool operator==(const CellId&, const CellId&) = default;
  friend auto operator<=>(const CellId& a, const CellId& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

/// T-construction filtration value: the minimum over the pixels (2-cubes)
/// of `frame` that contain `cell`.
double cell_value(const ImageFrame& frame, CellId cell);

struct PersistencePair {
  int dim = 0;
  double birth = 0.0;
  double death = kInfinity;
  /// dim 0: the pixel whose entry creates the component (minimum of the
  /// dying component). dim 1: the pixel whose entry closes the hole.
  Pixel birth_pixel;
  /// dim 0: the edge whose entry merges the component into an elder one.
  /// dim 1: the pixel (2-cube) that fills the hole. Absent for infinite pairs.
  std::optional<CellId> death_cell;

  bool is_infinite() const { return death == kInfinity; }
  double lifetime() const { return death - birth; }
};

struct DiagramProvenance {
  std::optional<std::size_t> frame_index;
  double sigma = 0.0;
  std::string region;
};

class PersistenceDiagram {
public:
  PersistenceDiagram() = default;
  explicit PersistenceDiagram(std::vector<PersistencePair> pairs) : pairs_(std::move(pairs)) {}

  std::span<const PersistencePair> pairs() const { return pairs_; }
  std::vector<PersistencePair>& mutable_pairs() { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  PersistenceDiagram in_dim(int dim) const;
  /// Pairs with death > birth.
  PersistenceDiagram without_zero_persistence() const;
  std::size_t infinite_count() const;
  /// Number of pairs with birth <= t < death.
  std::size_t alive_at(double t) const;
  /// (birth, death) multiset sorted ascending; convenient for comparisons.
  std::vector<std::pair<double, double>> sorted_intervals() const;

  DiagramProvenance provenance;

private:
  std::vector<PersistencePair> pairs_;
};

/// Dim-0 sublevel persistence of the T-construction by union-find over
/// 8-connected pixels, elder rule on merges. When `domain` is given (row-major
/// mask, nonzero = included) pixels outside it never enter the filtration;
/// each connected part of the domain yields one infinite pair.
///
/// Ties are processed in row-major order; among tied components the one whose
/// birth pixel comes first in row-major order is the elder.
PersistenceDiagram compute_pd0(const ImageFrame& frame, std::span<const std::uint8_t> domain = {});

/// Dim-1 sublevel persistence on the full frame by duality: union-find over
/// 4-connected superlevel sets with a virtual node for the frame border.
PersistenceDiagram compute_pd1(const ImageFrame& frame);

enum class InfiniteMode { max_finite_death, max_pixel_value };

InfiniteMode parse_infinite_mode(std::string_view name);
std::string_view to_string(InfiniteMode mode);

/// Replaces every infinite death by the largest finite death in the diagram
/// or by the largest pixel value of `context`.
PersistenceDiagram resolve_infinite(const PersistenceDiagram& diagram, InfiniteMode mode, const ImageFrame& context);

/// CSV with columns dim,birth,death,birth_x,birth_y; infinite deaths as "inf".
std::string diagram_to_csv(const PersistenceDiagram& diagram);

} // namespace cubetop
