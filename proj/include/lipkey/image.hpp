#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lipkey {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

// Axis-aligned pixel rectangle; (x, y) is the top-left pixel.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int right() const { return x + w; }   // one past the last column
  int bottom() const { return y + h; }  // one past the last row
  bool contains(const Rect& inner) const {
    return inner.x >= x && inner.y >= y && inner.right() <= right() &&
           inner.bottom() <= bottom();
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

// 8-bit single-channel raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  Rect bounds() const { return Rect{0, 0, width_, height_}; }

  std::uint8_t at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  // Clamped (border-replicated) access.
  std::uint8_t clamped(int x, int y) const;

  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Summed-area table with the same dimensions as its source (no padding).
class IntegralImage {
 public:
  IntegralImage() = default;
  explicit IntegralImage(const GrayImage& img);

  int width() const { return width_; }
  int height() const { return height_; }
  // Sum over all source pixels (x', y') with x' <= x and y' <= y.
  std::uint64_t at(int x, int y) const {
    return sums_[static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> sums_;
};

// Binary PGM ("P5"), maxval <= 255.
GrayImage load_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_pgm(const GrayImage& img);
GrayImage read_pgm_file(const std::filesystem::path& path);
void write_pgm_file(const std::filesystem::path& path, const GrayImage& img);

// Luma per 0.30 R + 0.59 G + 0.11 B, rounded half up.
std::uint8_t to_gray(std::uint8_t r, std::uint8_t g, std::uint8_t b);
GrayImage to_gray(int width, int height, std::span<const std::uint8_t> r,
                  std::span<const std::uint8_t> g,
                  std::span<const std::uint8_t> b);

IntegralImage integral_image(const GrayImage& img);

// Sum of the source pixels inside r. Throws BoundsError if r leaves the image.
std::uint64_t rect_sum(const IntegralImage& ii, const Rect& r);

// Rotation about the image center, bilinear, zero fill, same dimensions.
// Positive angles rotate counter-clockwise on screen (y axis points down).
GrayImage rotate(const GrayImage& img, double degrees);

// 2x2 box average; output dims are floor(dim / 2).
GrayImage half_sample(const GrayImage& img);
// Bilinear resampling to floor(dim / factor), factor > 1.
GrayImage downsample_by(const GrayImage& img, double factor);

GrayImage crop(const GrayImage& img, const Rect& r);

// Bilinear sample at real coordinates; outside pixels read as zero.
double sample_bilinear(const GrayImage& img, double x, double y);

// Round half up and clamp into [0, 255].
std::uint8_t quantize(double v);

}  // namespace lipkey
