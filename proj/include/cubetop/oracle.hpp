#pragma once

// Slow reference implementations used to check the cubical engine. Nothing
// here is optimized.

#include <array>
#include <cstddef>
#include <vector>

#include "cubetop/cubical.hpp"

namespace cubetop::oracle {

inline constexpr int kMaxSide = 32;

struct Cell {
  CellId id;
  double value = 0.0;
  std::vector<std::size_t> boundary; // indices into CubeComplex::cells
};

/// The full T-construction of a frame with cells sorted by
/// (value, dimension, row-major id).
struct CubeComplex {
  std::vector<Cell> cells;

  static CubeComplex from_frame(const ImageFrame& frame);
};

/// Standard column reduction of the Z/2 boundary matrix. Emits every pair,
/// including zero-persistence ones, and the essential classes.
PersistenceDiagram reduce(const CubeComplex& complex);

/// Convenience: reduce(CubeComplex::from_frame(frame)). Frames larger than
/// kMaxSide on either axis are rejected.
PersistenceDiagram reduce(const ImageFrame& frame);

struct Betti {
  std::size_t b0 = 0;
  std::size_t b1 = 0;
  friend bool operator==(const Betti&, const Betti&) = default;
};

/// b0: 8-connected components of {I <= t}; b1: 4-connected components of
/// {I > t} that do not touch the frame border. Flood fill.
Betti betti_at(const ImageFrame& frame, double t);

/// Number of vertices, edges and squares with filtration value <= t.
std::array<std::size_t, 3> cell_counts_at(const ImageFrame& frame, double t);

} // namespace cubetop::oracle
