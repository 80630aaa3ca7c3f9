#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cubetop/detect.hpp"
#include "cubetop/oracle.hpp"
#include "helpers.hpp"

using namespace cubetop;

namespace {

DetectParams whole(const ImageFrame& f, double sigma, std::optional<double> eta) {
  DetectParams p;
  p.region = RegionSpec::whole_frame(f.width(), f.height());
  p.sigma = sigma;
  p.eta = eta;
  return p;
}

// 9x9 plateau of 10 with two pits separated by the ridge.
ImageFrame two_pits() {
  ImageFrame f(9, 9, 10.0);
  f.at(2, 4) = 1.0;
  f.at(6, 4) = 3.0;
  return f;
}

} // namespace

TEST_CASE("constant frame yields the lone component") {
  const ImageFrame f(6, 5, 4.0);
  const auto pts = detect(f, whole(f, 0.0, std::nullopt));
  REQUIRE(pts.size() == 1);
  CHECK(pts.points[0].lifetime == 0.0); // infinite death set to the frame maximum
  CHECK(detect(f, whole(f, 0.0, 0.0)).empty());
}

TEST_CASE("two deep minima separated by a ridge") {
  const ImageFrame f = two_pits();
  const auto pts = detect(f, whole(f, 0.0, 0.5));
  REQUIRE(pts.size() == 2);
  std::vector<Pixel> locs{pts.points[0].location, pts.points[1].location};
  std::sort(locs.begin(), locs.end());
  CHECK(locs == std::vector<Pixel>{{2, 4}, {6, 4}});

  const auto ref = oracle::reduce(f).in_dim(0).without_zero_persistence();
  CHECK(ref.size() == 2);

  // eta equal to the largest lifetime removes everything.
  double longest = 0.0;
  for (const auto& p : pts.points) longest = std::max(longest, p.lifetime);
  CHECK(detect(f, whole(f, 0.0, longest)).empty());
}

TEST_CASE("region filter keeps birth pixels inside the polygon") {
  const ImageFrame f = two_pits();
  DetectParams p = whole(f, 0.0, 0.5);
  p.region = RegionSpec{{{0, 0}, {4.5, 0}, {4.5, 9}, {0, 9}}, std::nullopt};
  const auto pts = detect(f, p);
  REQUIRE(pts.size() == 1);
  CHECK(pts.points[0].location == Pixel{2, 4});

  DetectParams right = whole(f, 0.0, 0.5);
  right.region = RegionSpec{{{5, 1}, {9, 1}, {9, 8}, {5, 8}}, std::nullopt};
  const auto pr = detect(f, right);
  REQUIRE(pr.size() == 1);
  CHECK(pr.points[0].location == Pixel{6, 4}); // frame coordinates, not window coordinates
}

TEST_CASE("detection properties on random frames") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    ImageFrame f = test::random_frame(rng, 12, 1000);
    const double sigma = (trial % 3) * 0.7;

    // Monotone in eta.
    const auto lo = detect(f, whole(f, sigma, 0.5));
    const auto hi = detect(f, whole(f, sigma, 3.0));
    for (const auto& p : hi.points) {
      CHECK(std::any_of(lo.points.begin(), lo.points.end(), [&](const MarkedPoint& q) {
        return q.location == p.location && q.lifetime == p.lifetime;
      }));
    }
    for (const auto& p : lo.points) CHECK(p.lifetime > 0.5);

    // Random polygon membership.
    DetectParams poly = whole(f, sigma, std::nullopt);
    poly.region = RegionSpec{{{0.3, 0.2}, {f.width() - 0.1, 1.1}, {f.width() * 0.6, f.height() + 0.0}}, std::nullopt};
    try {
      validate_polygon(poly.region.polygon);
    } catch (const std::invalid_argument&) {
      continue;
    }
    const auto inside = pixels_in_polygon(poly.region.polygon, f.width(), f.height());
    if (poly.region.window(f.width(), f.height()).empty()) continue;
    for (const auto& p : detect(f, poly).points) {
      CHECK(std::find(inside.begin(), inside.end(), p.location) != inside.end());
    }
  }
}

TEST_CASE("one point per dim-0 pair with sigma 0 and no threshold") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    // Distinct values, so every pair is unambiguous.
    const ImageFrame base = test::random_frame(rng, 9, 5);
    std::vector<double> px(base.pixels().begin(), base.pixels().end());
    std::vector<std::size_t> perm(px.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < px.size(); ++i) px[perm[i]] = static_cast<double>(i);
    const ImageFrame f(base.width(), base.height(), px);
    CHECK(detect(f, whole(f, 0.0, std::nullopt)).size() == compute_pd0(f).size());
    const auto resolved = resolve_infinite(compute_pd0(f), InfiniteMode::max_pixel_value, f);
    CHECK(detect(f, whole(f, 0.0, 0.0)).size() == resolved.without_zero_persistence().size());
  }
}

TEST_CASE("count_columns matches the oracle diagram after the same filtering") {
  std::mt19937_64 rng(31);
  const ImageFrame f = test::frame_of(8, 8, [&] {
    std::vector<double> v(64);
    std::uniform_int_distribution<int> d(0, 9);
    for (double& x : v) x = d(rng);
    return v;
  }());
  const double eta = 2.0;
  const auto pts = detect(f, whole(f, 0.0, eta));
  const auto ref = resolve_infinite(oracle::reduce(f).in_dim(0), InfiniteMode::max_pixel_value, f);
  std::size_t expected = 0;
  for (const auto& p : ref.pairs()) expected += p.lifetime() > eta;
  CHECK(count_columns(pts) == expected);
  CHECK(count_columns(MarkedPointSet{}) == 0);
}

TEST_CASE("detect rejects bad parameters") {
  const ImageFrame f(4, 4, 1.0);
  DetectParams p = whole(f, -1.0, std::nullopt);
  CHECK_THROWS(detect(f, p));
  p = whole(f, 0.0, -0.5);
  CHECK_THROWS(detect(f, p));
  p = whole(f, 0.0, std::nullopt);
  p.region = RegionSpec::from_rect({10, 10, 12, 12});
  CHECK_THROWS(detect(f, p));
}

TEST_CASE("pd_threshold") {
  SUBCASE("single pair: ties go to the smallest t") {
    const ImageFrame f = test::frame_of(2, 1, {0, 10});
    const auto r = pd_threshold(f);
    CHECK(r.threshold == 0);
    CHECK(r.objective == 10);
    CHECK(r.binary == test::frame_of(2, 1, {0, 1}));
  }
  SUBCASE("pairs (0,10) and (3,8)") {
    // 1x5: 0 | 8 | 3 | 10 | 10, pits at 0 and 3 merge at 8; frame max 10.
    const ImageFrame f = test::frame_of(5, 1, {0, 8, 3, 10, 10});
    const auto r = pd_threshold(f);
    CHECK(r.threshold == 3);
    CHECK(r.objective == 15);
  }
  SUBCASE("constant frame") {
    const ImageFrame f(3, 3, 5.0);
    const auto r = pd_threshold(f);
    CHECK(r.threshold == 5);
    CHECK(r.binary == ImageFrame(3, 3, 0.0));
  }
}

TEST_CASE("default eta lookup and CSV") {
  CHECK(default_eta_for_sigma(2.0) == 1.0);
  CHECK(default_eta_for_sigma(4.0) == 0.4);
  CHECK(default_eta_for_sigma(6.0) == 0.1);
  CHECK_FALSE(default_eta_for_sigma(3.0).has_value());
  MarkedPointSet s;
  s.points = {{{3, 4}, 1.5}};
  CHECK(detections_to_csv(s) == "x,y,lifetime\n3,4,1.5\n");
}
