#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "cubetop/error.hpp"
#include "cubetop/image.hpp"
#include "cubetop/io.hpp"
#include "helpers.hpp"

using namespace cubetop;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cubetop_imagio_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

void write_raw(const fs::path& dir, int w, int h, int n, std::size_t bytes) {
  std::ofstream(dir / "header.json") << "{\"width\":" << w << ",\"height\":" << h << ",\"num_frames\":" << n
                                     << ",\"dtype\":\"u16le\"}";
  write_bytes(dir / "frames.bin", std::string(bytes, '\x01'));
}

} // namespace

TEST_CASE("frame construction validates pixels") {
  CHECK_THROWS_AS(ImageFrame(2, 1, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ImageFrame(1, 1, std::vector<double>{-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ImageFrame(1, 1, std::vector<double>{NAN}), std::invalid_argument);
  const ImageFrame f(3, 2, std::vector<double>{0, 1, 2, 3, 4, 5});
  CHECK(f.at(2, 1) == 5);
  CHECK(f.pixel(4) == Pixel{1, 1});
  CHECK(f.min_value() == 0);
  CHECK(f.max_value() == 5);
}

TEST_CASE("PGM round trip of a 2x2 frame") {
  const fs::path dir = scratch_dir("pgm");
  ImageStack stack(2, 2);
  stack.push_back(std::vector<std::uint16_t>{0, 1, 2, 3});
  save_stack(stack, dir, StackFormat::pgm_dir);
  const ImageStack back = load_stack(dir, StackFormat::pgm_dir);
  REQUIRE(back.frame_count() == 1);
  CHECK(back.frame(0) == ImageFrame(2, 2, std::vector<double>{0, 1, 2, 3}));
}

TEST_CASE("16-bit PGM keeps large values") {
  const fs::path dir = scratch_dir("pgm16");
  const ImageFrame f(3, 1, std::vector<double>{0, 300, 65535});
  write_pgm(dir / "a.pgm", f, 65535);
  CHECK(read_pgm(dir / "a.pgm") == f);
  CHECK_THROWS(write_pgm(dir / "b.pgm", f, 255));
}

TEST_CASE("PGM with samples above maxval is rejected") {
  const fs::path dir = scratch_dir("pgmbad");
  write_bytes(dir / "a.pgm", std::string("P5\n2 1\n10\n") + char(3) + char(11));
  CHECK_THROWS_AS(read_pgm(dir / "a.pgm"), IoError);
}

TEST_CASE("pgm_dir stacks need contiguous indices and equal sizes") {
  const fs::path dir = scratch_dir("gaps");
  write_pgm(dir / "frame_000000.pgm", ImageFrame(2, 2, 1.0), 255);
  write_pgm(dir / "frame_000002.pgm", ImageFrame(2, 2, 1.0), 255);
  CHECK_THROWS_AS(load_stack(dir, StackFormat::pgm_dir), IoError);

  const fs::path dir2 = scratch_dir("dims");
  write_pgm(dir2 / "frame_000000.pgm", ImageFrame(2, 2, 1.0), 255);
  write_pgm(dir2 / "frame_000001.pgm", ImageFrame(3, 2, 1.0), 255);
  CHECK_THROWS_AS(load_stack(dir2, StackFormat::pgm_dir), IoError);
}

TEST_CASE("raw_u16 stacks") {
  SUBCASE("48 bytes for 2 frames of 4x3") {
    const fs::path dir = scratch_dir("raw48");
    write_raw(dir, 4, 3, 2, 48);
    const ImageStack s = load_stack(dir, StackFormat::raw_u16);
    CHECK(s.frame_count() == 2);
    CHECK(s.width() == 4);
    CHECK(s.height() == 3);
    CHECK(s.counts(1)[11] == 0x0101);
  }
  SUBCASE("47 bytes is truncated") {
    const fs::path dir = scratch_dir("raw47");
    write_raw(dir, 4, 3, 2, 47);
    try {
      load_stack(dir, StackFormat::raw_u16);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("truncated frame data") != std::string::npos);
    }
  }
  SUBCASE("little-endian round trip") {
    const fs::path dir = scratch_dir("rawrt");
    ImageStack s(2, 1);
    s.push_back(std::vector<std::uint16_t>{1, 65535});
    s.push_back(std::vector<std::uint16_t>{256, 7});
    save_stack(s, dir, StackFormat::raw_u16);
    const ImageStack back = load_stack(dir, StackFormat::raw_u16);
    CHECK(back.counts(0)[1] == 65535);
    CHECK(back.counts(1)[0] == 256);
  }
  CHECK_THROWS_AS(load_stack(scratch_dir("missing") / "nope", StackFormat::raw_u16), IoError);
}

TEST_CASE("sum_frames") {
  ImageStack s(1, 1);
  s.push_back(std::vector<std::uint16_t>{1});
  s.push_back(std::vector<std::uint16_t>{2});
  s.push_back(std::vector<std::uint16_t>{4});
  CHECK(sum_frames(s, 1, 2) == s.frame(2));
  CHECK(sum_frames(s, 2, 1).at(0, 0) == 6);
  CHECK_THROWS_AS(sum_frames(s, 2, 2), std::out_of_range);
  CHECK_THROWS(sum_frames(s, 0, 0));

  ImageStack ones(3, 2);
  ones.push_back(ImageFrame(3, 2, 1.0));
  ones.push_back(ImageFrame(3, 2, 1.0));
  CHECK(sum_frames(ones, 2, 0) == ImageFrame(3, 2, 2.0));
}

TEST_CASE("sum_frames is additive over partitions of the window") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> v(0, 50);
  ImageStack s(4, 3);
  for (int k = 0; k < 9; ++k) {
    std::vector<std::uint16_t> c(12);
    for (auto& x : c) x = static_cast<std::uint16_t>(v(rng));
    s.push_back(c);
  }
  const ImageFrame whole = sum_frames(s, 7, 1);
  const ImageFrame a = sum_frames(s, 3, 1);
  const ImageFrame b = sum_frames(s, 4, 4);
  for (std::size_t i = 0; i < whole.size(); ++i) CHECK(whole[i] == a[i] + b[i]);
}

TEST_CASE("Gaussian kernel") {
  const GaussianKernel k(1.5);
  CHECK(k.radius() == 6);
  const auto w = k.weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (int dy = -6; dy <= 6; ++dy) {
    for (int dx = -6; dx <= 6; ++dx) {
      CHECK(k.weight(dx, dy) == k.weight(-dx, dy));
      CHECK(k.weight(dx, dy) == k.weight(dx, -dy));
    }
  }
  const GaussianKernel delta(0.0);
  CHECK(delta.radius() == 0);
  CHECK(delta.weight(0, 0) == 1.0);
}

TEST_CASE("smooth") {
  std::mt19937_64 rng(11);
  SUBCASE("sigma 0 is the identity") {
    const ImageFrame f = test::random_frame(rng, 9, 20);
    CHECK(smooth(f, 0.0) == f);
  }
  SUBCASE("constant frames stay constant, borders included") {
    const ImageFrame f(7, 5, 3.25);
    const ImageFrame g = smooth(f, 2.0);
    for (double v : g.pixels()) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
  }
  SUBCASE("impulse near the border, renormalized by in-frame mass") {
    // 10 / sum_{|i|<=2} exp(-i^2/2): only five of the seven taps are inside.
    const ImageFrame f(5, 1, std::vector<double>{0, 0, 10, 0, 0});
    CHECK(smooth(f, 1.0, 3).at(2, 0) == doctest::Approx(4.026199468942474).epsilon(1e-14));
  }
  SUBCASE("interior impulse takes 10 w(0)") {
    const ImageFrame f(9, 1, std::vector<double>{0, 0, 0, 0, 10, 0, 0, 0, 0});
    const GaussianKernel k(1.0, 3);
    const double expected = 10.0 * k.profile()[3];
    CHECK(expected == doctest::Approx(3.9905027965245488).epsilon(1e-14));
    CHECK(smooth(f, 1.0, 3).at(4, 0) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("interior impulse keeps its mass") {
    // Every window touching the spread impulse stays inside the frame.
    ImageFrame f(41, 41, 0.0);
    f.at(20, 20) = 7.0;
    const ImageFrame g = smooth(f, 2.0);
    double total = 0.0;
    for (double v : g.pixels()) total += v;
    CHECK(total == doctest::Approx(7.0).epsilon(1e-9));
  }
  SUBCASE("matches direct 2D summation") {
    const ImageFrame f = test::random_frame(rng, 12, 30);
    const double sigma = 1.3;
    const GaussianKernel k(sigma);
    const ImageFrame g = smooth(f, sigma);
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        double num = 0.0, mass = 0.0;
        for (int dy = -k.radius(); dy <= k.radius(); ++dy) {
          for (int dx = -k.radius(); dx <= k.radius(); ++dx) {
            if (!f.in_bounds(x + dx, y + dy)) continue;
            num += k.weight(dx, dy) * f.at(x + dx, y + dy);
            mass += k.weight(dx, dy);
          }
        }
        CHECK(g.at(x, y) == doctest::Approx(num / mass).epsilon(1e-12));
      }
    }
  }
  SUBCASE("never undershoots the input minimum") {
    for (int trial = 0; trial < 50; ++trial) {
      const ImageFrame f = test::random_frame(rng, 10, 9);
      const ImageFrame g = smooth(f, 0.5 + trial * 0.1);
      CHECK(g.min_value() >= f.min_value());
      CHECK(g.max_value() <= f.max_value());
    }
  }
  CHECK_THROWS(smooth(ImageFrame(2, 2), -1.0));
}

TEST_CASE("pixels_in_polygon") {
  const std::vector<Point2> square{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  CHECK(pixels_in_polygon(square, 5, 5) == std::vector<Pixel>{{0, 0}, {1, 0}, {0, 1}, {1, 1}});

  const std::vector<Point2> outside{{10, 10}, {12, 10}, {12, 12}};
  CHECK(pixels_in_polygon(outside, 5, 5).empty());

  const std::vector<Point2> triangle{{0, 0}, {1, 0}, {0, 1}};
  CHECK(pixels_in_polygon(triangle, 3, 3).empty());

  CHECK_THROWS(validate_polygon(std::vector<Point2>{{0, 0}, {1, 1}}));
  CHECK_THROWS(validate_polygon(std::vector<Point2>{{0, 0}, {1, 1}, {2, 2}}));
  CHECK_THROWS(validate_polygon(std::vector<Point2>{{0, 0}, {2, 2}, {2, 0}, {0, 2}}));
}

TEST_CASE("pixels_in_polygon is invariant under vertex rotation and matches brute force") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 14.0);
  int tested = 0;
  while (tested < 40) {
    std::vector<Point2> poly;
    for (int i = 0; i < 5; ++i) poly.push_back({u(rng), u(rng)});
    try {
      validate_polygon(poly);
    } catch (const std::invalid_argument&) {
      continue;
    }
    ++tested;
    const auto base = pixels_in_polygon(poly, 12, 12);
    for (int r = 1; r < 5; ++r) {
      std::rotate(poly.begin(), poly.begin() + 1, poly.end());
      CHECK(pixels_in_polygon(poly, 12, 12) == base);
    }
    // Independent crossing-number test at each center.
    std::vector<Pixel> brute;
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 12; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        bool inside = false;
        for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
          const Point2 a = poly[i], b = poly[j];
          if ((a.y > py) != (b.y > py) && px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x) inside = !inside;
        }
        if (inside) brute.push_back({x, y});
      }
    }
    CHECK(base == brute);
  }
}

TEST_CASE("region window and JSON") {
  const RegionSpec r = region_from_json(nlohmann::json::parse(R"({"polygon": [[1.5, 2], [6, 2.5], [4, 7.2]]})"));
  CHECK(r.window(20, 20) == PixelRect{1, 2, 6, 8});
  CHECK(r.window(5, 5) == PixelRect{1, 2, 5, 5});
  const RegionSpec rr = region_from_json(nlohmann::json::parse(R"({"rect": [2, 3, 9, 8]})"));
  CHECK(rr.window(20, 20) == PixelRect{2, 3, 9, 8});
  CHECK(region_from_json(region_to_json(r)).polygon == r.polygon);
  CHECK_THROWS(region_from_json(nlohmann::json::parse("{}")));
  CHECK_THROWS(region_from_json(nlohmann::json::parse(R"({"rect": [4, 3, 2, 8]})")));
}

TEST_CASE("atomic writes leave no temp file") {
  const fs::path dir = scratch_dir("atomic");
  write_file_atomic(dir / "x.txt", "hello");
  CHECK(fs::exists(dir / "x.txt"));
  CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
}
