#include "cubetop/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>

namespace cubetop::oracle {

CubeComplex CubeComplex::from_frame(const ImageFrame& frame) {
  if (frame.width() > kMaxSide || frame.height() > kMaxSide) {
    throw std::invalid_argument("oracle is limited to frames of at most 32x32");
  }
  std::vector<Cell> cells;
  for (int y = 0; y <= 2 * frame.height(); ++y) {
    for (int x = 0; x <= 2 * frame.width(); ++x) {
      CellId id{x, y};
      cells.push_back({id, cell_value(frame, id), {}});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::make_tuple(a.value, a.id.dim(), a.id) < std::make_tuple(b.value, b.id.dim(), b.id);
  });
  std::map<std::pair<int, int>, std::size_t> where;
  for (std::size_t i = 0; i < cells.size(); ++i) where[{cells[i].id.x, cells[i].id.y}] = i;
  for (auto& c : cells) {
    if (c.id.x & 1) {
      c.boundary.push_back(where.at({c.id.x - 1, c.id.y}));
      c.boundary.push_back(where.at({c.id.x + 1, c.id.y}));
    }
    if (c.id.y & 1) {
      c.boundary.push_back(where.at({c.id.x, c.id.y - 1}));
      c.boundary.push_back(where.at({c.id.x, c.id.y + 1}));
    }
  }
  return {std::move(cells)};
}

namespace {

using Column = std::vector<std::uint64_t>;

long low(const Column& col) {
  for (std::size_t w = col.size(); w-- > 0;) {
    if (col[w]) return static_cast<long>(w * 64 + 63 - static_cast<std::size_t>(__builtin_clzll(col[w])));
  }
  return -1;
}

} // namespace

PersistenceDiagram reduce(const CubeComplex& complex) {
  const std::size_t n = complex.cells.size();
  const std::size_t words = (n + 63) / 64;
  std::vector<Column> cols(n, Column(words, 0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i : complex.cells[j].boundary) cols[j][i / 64] ^= std::uint64_t{1} << (i % 64);
  }
  std::vector<long> owner(n, -1); // owner[row] = column whose low is row
  std::vector<bool> paired(n, false);
  std::vector<PersistencePair> pairs;

  auto birth_pixel = [](CellId id) {
    // Any pixel adjacent to the cell in the lower-left direction; clamps to
    // the frame at the far borders.
    return Pixel{std::max(0, (id.x - 1) / 2), std::max(0, (id.y - 1) / 2)};
  };

  for (std::size_t j = 0; j < n; ++j) {
    long l = low(cols[j]);
    while (l >= 0 && owner[static_cast<std::size_t>(l)] >= 0) {
      const Column& other = cols[static_cast<std::size_t>(owner[static_cast<std::size_t>(l)])];
      for (std::size_t w = 0; w < words; ++w) cols[j][w] ^= other[w];
      l = low(cols[j]);
    }
    if (l >= 0) {
      const auto i = static_cast<std::size_t>(l);
      owner[i] = static_cast<long>(j);
      paired[i] = paired[j] = true;
      const Cell& b = complex.cells[i];
      pairs.push_back({b.id.dim(), b.value, complex.cells[j].value, birth_pixel(b.id), complex.cells[j].id});
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!paired[j]) {
      const Cell& c = complex.cells[j];
      pairs.push_back({c.id.dim(), c.value, kInfinity, birth_pixel(c.id), std::nullopt});
    }
  }
  return PersistenceDiagram(std::move(pairs));
}

PersistenceDiagram reduce(const ImageFrame& frame) { return reduce(CubeComplex::from_frame(frame)); }

namespace {

std::size_t count_components(const ImageFrame& frame, const std::vector<std::uint8_t>& in, bool eight,
                             bool skip_border_touching) {
  const int w = frame.width(), h = frame.height();
  std::vector<std::uint8_t> seen(in.size(), 0);
  std::size_t count = 0;
  std::vector<Pixel> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t s = frame.index(x0, y0);
      if (!in[s] || seen[s]) continue;
      bool touches_border = false;
      seen[s] = 1;
      stack.push_back({x0, y0});
      while (!stack.empty()) {
        Pixel p = stack.back();
        stack.pop_back();
        if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) touches_border = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
            const int x = p.x + dx, y = p.y + dy;
            if (!frame.in_bounds(x, y)) continue;
            const std::size_t i = frame.index(x, y);
            if (in[i] && !seen[i]) {
              seen[i] = 1;
              stack.push_back({x, y});
            }
          }
        }
      }
      if (!(skip_border_touching && touches_border)) ++count;
    }
  }
  return count;
}

} // namespace

Betti betti_at(const ImageFrame& frame, double t) {
  std::vector<std::uint8_t> black(frame.size()), white(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    black[i] = frame[i] <= t;
    white[i] = !black[i];
  }
  return {count_components(frame, black, true, false), count_components(frame, white, false, true)};
}

std::array<std::size_t, 3> cell_counts_at(const ImageFrame& frame, double t) {
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (int y = 0; y <= 2 * frame.height(); ++y) {
    for (int x = 0; x <= 2 * frame.width(); ++x) {
      CellId id{x, y};
      if (cell_value(frame, id) <= t) ++counts[static_cast<std::size_t>(id.dim())];
    }
  }
  return counts;
}

} // namespace cubetop::oracle
