#include <doctest.h>

#include <random>

#include "cubetop/oracle.hpp"
#include "helpers.hpp"

using namespace cubetop;
using Intervals = std::vector<std::pair<double, double>>;

TEST_CASE("oracle examples") {
  const auto single = oracle::reduce(ImageFrame(1, 1, 4.0));
  CHECK(single.in_dim(0).without_zero_persistence().sorted_intervals() == Intervals{{4, kInfinity}});
  CHECK(single.in_dim(1).without_zero_persistence().empty());

  CHECK(oracle::reduce(test::frame_of(4, 1, {3, 1, 2, 0})).in_dim(0).without_zero_persistence().sorted_intervals() ==
        Intervals{{0, kInfinity}, {1, 2}});
  CHECK(oracle::reduce(test::frame_of(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0}))
            .in_dim(1)
            .without_zero_persistence()
            .sorted_intervals() == Intervals{{0, 9}});
}

TEST_CASE("oracle guard rail") {
  CHECK_NOTHROW(oracle::reduce(ImageFrame(32, 1, 0.0)));
  CHECK_THROWS(oracle::reduce(ImageFrame(33, 1, 0.0)));
}

TEST_CASE("boundary of a boundary vanishes") {
  std::mt19937_64 rng(4);
  const auto cx = oracle::CubeComplex::from_frame(test::random_frame(rng, 5, 9));
  for (const auto& cell : cx.cells) {
    if (cell.id.dim() != 2) continue;
    std::vector<int> parity(cx.cells.size(), 0);
    for (std::size_t e : cell.boundary) {
      for (std::size_t v : cx.cells[e].boundary) parity[v] ^= 1;
    }
    for (int p : parity) CHECK(p == 0);
  }
}

TEST_CASE("cells are sorted and take the minimum over containing pixels") {
  std::mt19937_64 rng(8);
  const ImageFrame f = test::random_frame(rng, 6, 9);
  const auto cx = oracle::CubeComplex::from_frame(f);
  CHECK(cx.cells.size() == static_cast<std::size_t>((2 * f.width() + 1) * (2 * f.height() + 1)));
  for (std::size_t i = 1; i < cx.cells.size(); ++i) {
    const auto& a = cx.cells[i - 1];
    const auto& b = cx.cells[i];
    CHECK((a.value < b.value || (a.value == b.value && a.id.dim() <= b.id.dim())));
  }
  for (const auto& c : cx.cells) CHECK(c.value == cell_value(f, c.id));
}

TEST_CASE("betti_at examples") {
  CHECK(oracle::betti_at(test::frame_of(2, 2, {1, 2, 3, 4}), 4) == oracle::Betti{1, 0});
  CHECK(oracle::betti_at(test::frame_of(2, 2, {0, 5, 5, 0}), 0) == oracle::Betti{1, 0});
  CHECK(oracle::betti_at(test::frame_of(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0}), 0) == oracle::Betti{1, 1});
  CHECK(oracle::betti_at(test::frame_of(2, 2, {1, 2, 3, 4}), 0) == oracle::Betti{0, 0});
}

TEST_CASE("reduce agrees with flood-fill Betti numbers") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 150; ++trial) {
    const ImageFrame f = test::random_frame(rng, 7, 9);
    const auto pd = oracle::reduce(f);
    const auto d0 = pd.in_dim(0);
    const auto d1 = pd.in_dim(1);
    for (int t = 0; t <= 9; ++t) {
      const auto b = oracle::betti_at(f, t);
      CHECK(d0.alive_at(t) == b.b0);
      CHECK(d1.alive_at(t) == b.b1);
    }
  }
}
