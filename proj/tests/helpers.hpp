#pragma once

#include <random>
#include <vector>

#include "cubetop/image.hpp"

namespace test {

inline cubetop::ImageFrame random_frame(std::mt19937_64& rng, int max_side, int max_value) {
  std::uniform_int_distribution<int> side(1, max_side);
  std::uniform_int_distribution<int> value(0, max_value);
  const int w = side(rng);
  const int h = side(rng);
  std::vector<double> px(static_cast<std::size_t>(w) * h);
  for (double& v : px) v = value(rng);
  return cubetop::ImageFrame(w, h, std::move(px));
}

inline cubetop::ImageFrame frame_of(int w, int h, std::vector<double> px) {
  return cubetop::ImageFrame(w, h, std::move(px));
}

} // namespace test
