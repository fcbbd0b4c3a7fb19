#pragma once

#include <cstdint>
#include <vector>

#include "lipkey/image.hpp"
#include "lipkey/synth.hpp"

namespace lipkey::test {

inline GrayImage random_image(Rng& rng, int w, int h) {
  GrayImage img(w, h);
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.next() % 256);
  return img;
}

inline GrayImage from_rows(const std::vector<std::vector<int>>& rows) {
  GrayImage img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) img.at(x, y) = static_cast<std::uint8_t>(rows[y][x]);
  }
  return img;
}

inline std::uint64_t brute_sum(const GrayImage& img, const Rect& r) {
  std::uint64_t s = 0;
  for (int y = r.y; y < r.bottom(); ++y) {
    for (int x = r.x; x < r.right(); ++x) s += img.at(x, y);
  }
  return s;
}

// Bright axis-aligned square on a dark ground.
inline GrayImage bright_square(int size, int x0, int y0, int side, std::uint8_t fg = 220,
                               std::uint8_t bg = 20) {
  GrayImage img(size, size, bg);
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) img.at(x, y) = fg;
  }
  return img;
}

}  // namespace lipkey::test
