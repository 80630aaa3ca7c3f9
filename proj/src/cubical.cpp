#include "cubetop/cubical.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <sstream>
#include <stdexcept>

#include "cubetop/format.hpp"

namespace cubetop {

double cell_value(const ImageFrame& frame, CellId cell) {
  // Pixels containing the cell: along an odd axis only one, along an even
  // axis the two on either side.
  const int xs[2] = {(cell.x - 1) >> 1, cell.x >> 1};
  const int ys[2] = {(cell.y - 1) >> 1, cell.y >> 1};
  double best = kInfinity;
  for (int j = (cell.y & 1); j < 2; ++j) {
    for (int i = (cell.x & 1); i < 2; ++i) {
      if (frame.in_bounds(xs[i], ys[j])) best = std::min(best, frame.at(xs[i], ys[j]));
    }
  }
  return best;
}

PersistenceDiagram PersistenceDiagram::in_dim(int dim) const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs_) {
    if (p.dim == dim) out.push_back(p);
  }
  PersistenceDiagram d(std::move(out));
  d.provenance = provenance;
  return d;
}

PersistenceDiagram PersistenceDiagram::without_zero_persistence() const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs_) {
    if (p.death > p.birth) out.push_back(p);
  }
  PersistenceDiagram d(std::move(out));
  d.provenance = provenance;
  return d;
}

std::size_t PersistenceDiagram::infinite_count() const {
  return static_cast<std::size_t>(std::count_if(pairs_.begin(), pairs_.end(), [](const auto& p) { return p.is_infinite(); }));
}

std::size_t PersistenceDiagram::alive_at(double t) const {
  return static_cast<std::size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [t](const auto& p) { return p.birth <= t && t < p.death; }));
}

std::vector<std::pair<double, double>> PersistenceDiagram::sorted_intervals() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.emplace_back(p.birth, p.death);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Pixel indices sorted by (value, row-major index). Values are finite and
// nonnegative, so their bit patterns order like the values and a stable LSD
// radix sort over row-major input keeps the index tie-break. Digits that
// are the same for every pixel are skipped.
std::vector<std::uint32_t> sublevel_order(const ImageFrame& frame, std::span<const std::uint8_t> domain) {
  const auto px = frame.pixels();
  std::vector<std::uint32_t> order;
  std::vector<std::uint64_t> keys;
  order.reserve(frame.size());
  keys.reserve(frame.size());
  std::uint64_t all_or = 0, all_and = ~std::uint64_t{0};
  for (std::uint32_t i = 0; i < frame.size(); ++i) {
    if (!domain.empty() && !domain[i]) continue;
    const std::uint64_t key = std::bit_cast<std::uint64_t>(px[i] + 0.0); // folds -0.0 into +0.0
    order.push_back(i);
    keys.push_back(key);
    all_or |= key;
    all_and &= key;
  }
  const std::uint64_t varying = all_or ^ all_and;

  const int bits = order.size() < (1u << 16) ? 8 : 16;
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::vector<std::uint32_t> order_tmp(order.size());
  std::vector<std::uint64_t> keys_tmp(keys.size());
  std::vector<std::size_t> count(std::size_t{1} << bits);
  for (int shift = 0; shift < 64; shift += bits) {
    if (((varying >> shift) & mask) == 0) continue;
    std::fill(count.begin(), count.end(), 0);
    for (std::uint64_t key : keys) ++count[(key >> shift) & mask];
    std::size_t acc = 0;
    for (auto& c : count) {
      const std::size_t n = c;
      c = acc;
      acc += n;
    }
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const std::size_t to = count[(keys[k] >> shift) & mask]++;
      order_tmp[to] = order[k];
      keys_tmp[to] = keys[k];
    }
    order.swap(order_tmp);
    keys.swap(keys_tmp);
  }
  return order;
}

constexpr std::uint32_t kNone = 0xffffffffu;

// Union-find node. Roots are always the elder member of their component
// (smallest rank), so a root doubles as the component's birth pixel.
// parent == kNone marks a pixel that has not entered yet.
struct Node {
  std::uint32_t parent = kNone;
  std::uint32_t rank = 0;
};

std::uint32_t find(std::vector<Node>& nodes, std::uint32_t i) {
  while (nodes[i].parent != i) {
    nodes[i].parent = nodes[nodes[i].parent].parent;
    i = nodes[i].parent;
  }
  return i;
}

} // namespace

PersistenceDiagram compute_pd0(const ImageFrame& frame, std::span<const std::uint8_t> domain) {
  if (!domain.empty() && domain.size() != frame.size()) {
    throw std::invalid_argument("domain mask size does not match frame");
  }
  const auto order = sublevel_order(frame, domain);
  if (order.empty()) throw std::invalid_argument("persistence domain is empty");

  // Nodes live on the frame padded by a ring that never enters, so
  // neighbours are plain offsets.
  const int w = frame.width();
  const std::uint32_t W = static_cast<std::uint32_t>(w) + 2;
  const auto px = frame.pixels();
  std::vector<Node> nodes(static_cast<std::size_t>(W) * (static_cast<std::size_t>(frame.height()) + 2));
  auto padded = [&](std::uint32_t i) { return (i / w + 1) * W + i % w + 1; };
  auto unpadded = [&](std::uint32_t j) { return (j / W - 1) * w + j % W - 1; };
  std::vector<PersistencePair> pairs;

  for (std::uint32_t k = 0; k < order.size(); ++k) {
    const std::uint32_t q = order[k];
    const std::uint32_t j = padded(q);

    // Present neighbours, row by row: nb[dy + 1][dx + 1].
    std::uint32_t nb[3][3];
    for (int dy = 0; dy < 3; ++dy) {
      for (int dx = 0; dx < 3; ++dx) {
        const std::uint32_t n = j + (dy - 1) * W + dx - 1;
        nb[dy][dx] = nodes[n].parent != kNone ? n : kNone;
      }
    }
    nb[1][1] = kNone;
    nodes[j] = {j, k};

    // Component root touching each corner of q (TL, TR, BR, BL), via any
    // present pixel sharing that corner.
    std::array<std::uint32_t, 4> corner_root{kNone, kNone, kNone, kNone};
    const int cdx[4] = {-1, 1, 1, -1};
    const int cdy[4] = {-1, -1, 1, 1};
    for (int c = 0; c < 4; ++c) {
      const std::uint32_t cand[3] = {nb[1][1 + cdx[c]], nb[1 + cdy[c]][1], nb[1 + cdy[c]][1 + cdx[c]]};
      for (std::uint32_t n : cand) {
        if (n != kNone) {
          corner_root[c] = find(nodes, n);
          break;
        }
      }
    }

    std::array<std::uint32_t, 4> roots{};
    std::size_t nroots = 0;
    for (std::uint32_t r : corner_root) {
      if (r != kNone && std::find(roots.begin(), roots.begin() + nroots, r) == roots.begin() + nroots) roots[nroots++] = r;
    }
    if (nroots == 0) continue; // q starts a component

    std::uint32_t survivor = roots[0];
    for (std::size_t r = 1; r < nroots; ++r) {
      if (nodes[roots[r]].rank < nodes[survivor].rank) survivor = roots[r];
    }

    if (nroots > 1) {
      const Pixel p = frame.pixel(q);
      // Edges of q in corner order: top (TL-TR), right (TR-BR), bottom
      // (BR-BL), left (BL-TL). An edge is new at this value iff the pixel
      // across it has not entered.
      const bool edge_new[4] = {nb[0][1] == kNone, nb[1][2] == kNone, nb[2][1] == kNone, nb[1][0] == kNone};
      const CellId edge_cell[4] = {{2 * p.x + 1, 2 * p.y}, {2 * p.x + 2, 2 * p.y + 1}, {2 * p.x + 1, 2 * p.y + 2},
                                   {2 * p.x, 2 * p.y + 1}};
      for (std::size_t r = 0; r < nroots; ++r) {
        const std::uint32_t dying = roots[r];
        if (dying == survivor) continue;
        std::optional<CellId> killer;
        for (int e = 0; e < 4 && !killer; ++e) {
          const std::uint32_t a = corner_root[e], b = corner_root[(e + 1) % 4];
          if (edge_new[e] && ((a == dying) != (b == dying))) killer = edge_cell[e];
        }
        const std::uint32_t bp = unpadded(dying);
        pairs.push_back({0, px[bp], px[q], frame.pixel(bp), killer});
        nodes[dying].parent = survivor;
      }
    }
    nodes[j].parent = survivor;
  }

  for (std::uint32_t q : order) {
    const std::uint32_t j = padded(q);
    if (nodes[j].parent == j) pairs.push_back({0, px[q], kInfinity, frame.pixel(q), std::nullopt});
  }
  return PersistenceDiagram(std::move(pairs));
}

PersistenceDiagram compute_pd1(const ImageFrame& frame) {
  const int w = frame.width();
  const int h = frame.height();
  const auto px = frame.pixels();
  const auto n = static_cast<std::uint32_t>(frame.size());

  // Superlevel order is the exact reverse of the sublevel order, so a
  // component's elder is the one whose maximum entered first.
  auto order = sublevel_order(frame, {});
  std::reverse(order.begin(), order.end());

  // Padded grid; the ring is present from the start and joined to one corner
  // node standing for the outside, eldest of all.
  const std::uint32_t W = static_cast<std::uint32_t>(w) + 2;
  const std::uint32_t H = static_cast<std::uint32_t>(h) + 2;
  std::vector<Node> nodes(static_cast<std::size_t>(W) * H);
  constexpr std::uint32_t border = 0;
  for (std::uint32_t x = 0; x < W; ++x) {
    nodes[x] = {border, 0};
    nodes[(H - 1) * W + x] = {border, 0};
  }
  for (std::uint32_t y = 0; y < H; ++y) {
    nodes[y * W] = {border, 0};
    nodes[y * W + W - 1] = {border, 0};
  }
  auto unpadded = [&](std::uint32_t j) { return (j / W - 1) * w + j % W - 1; };
  std::vector<PersistencePair> pairs;

  const std::int64_t step[4] = {-static_cast<std::int64_t>(W), 1, static_cast<std::int64_t>(W), -1};
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t q = order[k];
    const std::uint32_t j = (q / w + 1) * W + q % w + 1;
    std::array<std::uint32_t, 4> roots{};
    std::size_t nroots = 0;
    for (int d = 0; d < 4; ++d) {
      const auto i = static_cast<std::uint32_t>(j + step[d]);
      if (nodes[i].parent == kNone) continue;
      const std::uint32_t r = find(nodes, i);
      if (std::find(roots.begin(), roots.begin() + nroots, r) == roots.begin() + nroots) roots[nroots++] = r;
    }
    nodes[j] = {j, k + 1};
    if (nroots == 0) continue;

    std::uint32_t survivor = roots[0];
    for (std::size_t r = 1; r < nroots; ++r) {
      if (nodes[roots[r]].rank < nodes[survivor].rank) survivor = roots[r];
    }
    for (std::size_t r = 0; r < nroots; ++r) {
      const std::uint32_t dying = roots[r];
      if (dying == survivor) continue;
      // Hole born when q closes it off, dies when its highest pixel fills in.
      const std::uint32_t top = unpadded(dying);
      pairs.push_back({1, px[q], px[top], frame.pixel(q), CellId::of_pixel(frame.pixel(top))});
      nodes[dying].parent = survivor;
    }
    nodes[j].parent = survivor;
  }
  return PersistenceDiagram(std::move(pairs));
}

InfiniteMode parse_infinite_mode(std::string_view name) {
  if (name == "max_finite_death") return InfiniteMode::max_finite_death;
  if (name == "max_pixel_value") return InfiniteMode::max_pixel_value;
  throw std::invalid_argument("unknown infinite mode '" + std::string(name) +
                              "' (expected max_finite_death or max_pixel_value)");
}

std::string_view to_string(InfiniteMode mode) {
  return mode == InfiniteMode::max_finite_death ? "max_finite_death" : "max_pixel_value";
}

PersistenceDiagram resolve_infinite(const PersistenceDiagram& diagram, InfiniteMode mode, const ImageFrame& context) {
  if (diagram.infinite_count() == 0) return diagram;
  double replacement = 0.0;
  if (mode == InfiniteMode::max_pixel_value) {
    replacement = context.max_value();
  } else {
    bool any = false;
    for (const auto& p : diagram.pairs()) {
      if (!p.is_infinite()) {
        replacement = any ? std::max(replacement, p.death) : p.death;
        any = true;
      }
    }
    if (!any) throw std::invalid_argument("max_finite_death needs at least one finite pair");
  }
  PersistenceDiagram out = diagram;
  for (auto& p : out.mutable_pairs()) {
    // A death below the birth would make a negative lifetime; the birth
    // bounds the replacement from below.
    if (p.is_infinite()) p.death = std::max(replacement, p.birth);
  }
  return out;
}

std::string diagram_to_csv(const PersistenceDiagram& diagram) {
  std::ostringstream out;
  out << "dim,birth,death,birth_x,birth_y\n";
  for (const auto& p : diagram.pairs()) {
    out << p.dim << ',' << format_real(p.birth) << ',' << (p.is_infinite() ? std::string("inf") : format_real(p.death))
        << ',' << p.birth_pixel.x << ',' << p.birth_pixel.y << '\n';
  }
  return out.str();
}

} // namespace cubetop
