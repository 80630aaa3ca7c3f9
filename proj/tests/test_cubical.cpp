#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <random>

#include "cubetop/cubical.hpp"
#include "cubetop/oracle.hpp"
#include "helpers.hpp"

using namespace cubetop;
using Intervals = std::vector<std::pair<double, double>>;

TEST_CASE("cell values follow the T-construction") {
  const ImageFrame f = test::frame_of(2, 2, {4, 1, 3, 2});
  CHECK(cell_value(f, CellId::of_pixel({1, 0})) == 1);
  CHECK(cell_value(f, {2, 2}) == 1); // center vertex sees all four pixels
  CHECK(cell_value(f, {1, 2}) == 3); // horizontal edge between (0,0) and (0,1)
  CHECK(cell_value(f, {0, 0}) == 4); // corner vertex
}

TEST_CASE("PD0 examples") {
  SUBCASE("1x4 [3,1,2,0]") {
    const auto pd = compute_pd0(test::frame_of(4, 1, {3, 1, 2, 0}));
    CHECK(pd.without_zero_persistence().sorted_intervals() == Intervals{{0, kInfinity}, {1, 2}});
  }
  SUBCASE("constant frame") {
    const auto pd = compute_pd0(ImageFrame(5, 4, 6.0));
    CHECK(pd.without_zero_persistence().sorted_intervals() == Intervals{{6, kInfinity}});
    CHECK(pd.infinite_count() == 1);
  }
  SUBCASE("diagonal zeros are 8-connected") {
    const auto pd = compute_pd0(test::frame_of(2, 2, {0, 5, 5, 0}));
    CHECK(pd.without_zero_persistence().sorted_intervals() == Intervals{{0, kInfinity}});
  }
  SUBCASE("birth pixel and death edge") {
    const auto pd = compute_pd0(test::frame_of(4, 1, {3, 1, 2, 0}));
    for (const auto& p : pd.pairs()) {
      if (p.birth == 1 && p.death == 2) {
        CHECK(p.birth_pixel == Pixel{1, 0});
        REQUIRE(p.death_cell);
        CHECK(p.death_cell->dim() == 1);
        CHECK(cell_value(test::frame_of(4, 1, {3, 1, 2, 0}), *p.death_cell) == 2);
      }
      if (p.is_infinite()) CHECK(p.birth_pixel == Pixel{3, 0});
    }
  }
}

TEST_CASE("PD0 on a restricted domain") {
  const ImageFrame f = test::frame_of(5, 1, {0, 4, 9, 4, 1});
  const std::vector<std::uint8_t> left{1, 1, 0, 1, 1};
  const auto pd = compute_pd0(f, left);
  CHECK(pd.infinite_count() == 2);
  CHECK(pd.without_zero_persistence().sorted_intervals() == Intervals{{0, kInfinity}, {1, kInfinity}});
  CHECK_THROWS(compute_pd0(f, std::vector<std::uint8_t>(5, 0)));
}

TEST_CASE("PD1 examples") {
  SUBCASE("ring of zeros around a 9") {
    const auto pd = compute_pd1(test::frame_of(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0}));
    CHECK(pd.without_zero_persistence().sorted_intervals() == Intervals{{0, 9}});
  }
  SUBCASE("monotone gradient has no holes") {
    std::vector<double> px(20);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>(i);
    CHECK(compute_pd1(test::frame_of(5, 4, px)).without_zero_persistence().empty());
  }
  SUBCASE("constant frame has no holes") {
    CHECK(compute_pd1(ImageFrame(4, 4, 2.0)).without_zero_persistence().empty());
  }
  SUBCASE("no infinite dim-1 pairs") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) CHECK(compute_pd1(test::random_frame(rng, 9, 9)).infinite_count() == 0);
  }
}

TEST_CASE("resolve_infinite") {
  const ImageFrame f = test::frame_of(4, 1, {3, 1, 2, 0});
  const auto pd = compute_pd0(f).without_zero_persistence();
  CHECK(resolve_infinite(pd, InfiniteMode::max_finite_death, f).sorted_intervals() == Intervals{{0, 2}, {1, 2}});

  const ImageFrame g = test::frame_of(2, 1, {0, 7});
  CHECK(resolve_infinite(compute_pd0(g), InfiniteMode::max_pixel_value, g).sorted_intervals() == Intervals{{0, 7}});
  CHECK_THROWS(resolve_infinite(compute_pd0(g), InfiniteMode::max_finite_death, g));

  const auto finite = compute_pd1(test::frame_of(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0}));
  CHECK(resolve_infinite(finite, InfiniteMode::max_finite_death, f).sorted_intervals() == finite.sorted_intervals());

  CHECK(parse_infinite_mode("max_pixel_value") == InfiniteMode::max_pixel_value);
  CHECK(to_string(InfiniteMode::max_finite_death) == "max_finite_death");
  CHECK_THROWS(parse_infinite_mode("largest"));
}

TEST_CASE("engine equals matrix reduction off the diagonal") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const ImageFrame f = test::random_frame(rng, 8, 9);
    const auto ref = oracle::reduce(f);
    CHECK(compute_pd0(f).without_zero_persistence().sorted_intervals() ==
          ref.in_dim(0).without_zero_persistence().sorted_intervals());
    CHECK(compute_pd1(f).without_zero_persistence().sorted_intervals() ==
          ref.in_dim(1).without_zero_persistence().sorted_intervals());
  }
}

TEST_CASE("elder rule attribution") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const ImageFrame f = test::random_frame(rng, 10, 20);
    const auto pd = compute_pd0(f);
    CHECK(pd.infinite_count() == 1);
    for (const auto& p : pd.pairs()) {
      CHECK(p.birth == f.at(p.birth_pixel.x, p.birth_pixel.y));
      CHECK(p.birth <= p.death);
      if (!p.is_infinite()) {
        REQUIRE(p.death_cell);
        CHECK(cell_value(f, *p.death_cell) == p.death);
      }
    }
    // The surviving class is born at the global minimum.
    for (const auto& p : pd.pairs()) {
      if (p.is_infinite()) CHECK(p.birth == f.min_value());
    }
  }
}

TEST_CASE("Euler consistency at every threshold") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const ImageFrame f = test::random_frame(rng, 8, 9);
    const auto d0 = compute_pd0(f);
    const auto d1 = compute_pd1(f);
    for (int t = 0; t <= 9; ++t) {
      const auto c = oracle::cell_counts_at(f, t);
      const long long chi = static_cast<long long>(c[0]) - static_cast<long long>(c[1]) + static_cast<long long>(c[2]);
      CHECK(static_cast<long long>(d0.alive_at(t)) - static_cast<long long>(d1.alive_at(t)) == chi);
    }
  }
}

TEST_CASE("translation invariance with high padding") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const ImageFrame f = test::random_frame(rng, 6, 9);
    ImageFrame padded(f.width() + 3, f.height() + 2, 9.0);
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) padded.at(x + 2, y + 1) = f.at(x, y);
    }
    ImageFrame padded_self(f.width() + 3, f.height() + 2, 9.0);
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) padded_self.at(x + 1, y + 1) = f.at(x, y);
    }
    CHECK(compute_pd0(padded).without_zero_persistence().sorted_intervals() ==
          compute_pd0(padded_self).without_zero_persistence().sorted_intervals());
    CHECK(compute_pd1(padded).without_zero_persistence().sorted_intervals() ==
          compute_pd1(padded_self).without_zero_persistence().sorted_intervals());
  }
}

TEST_CASE("diagram CSV") {
  const auto pd = compute_pd0(test::frame_of(2, 1, {0, 1}));
  const std::string csv = diagram_to_csv(pd);
  CHECK(csv.rfind("dim,birth,death,birth_x,birth_y\n", 0) == 0);
  CHECK(csv.find("0,0,inf,0,0\n") != std::string::npos);
}

TEST_CASE("a 512x512 frame is fast") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> v(0, 65535);
  std::vector<double> px(512 * 512);
  for (double& x : px) x = v(rng);
  const ImageFrame f(512, 512, std::move(px));
  const auto t0 = std::chrono::steady_clock::now();
  const auto d0 = compute_pd0(f);
  const auto d1 = compute_pd1(f);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(d0.infinite_count() == 1);
  CHECK(secs < 1.0);
}
