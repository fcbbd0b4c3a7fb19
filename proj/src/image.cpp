#include "lipkey/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "lipkey/error.hpp"

namespace lipkey {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw SizeError("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw SizeError("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw SizeError("pixel buffer does not match image dimensions");
  }
}

std::uint8_t GrayImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()) {
  sums_.resize(static_cast<std::size_t>(width_) * height_);
  for (int y = 0; y < height_; ++y) {
    std::uint64_t row = 0;
    for (int x = 0; x < width_; ++x) {
      row += img.at(x, y);
      const std::uint64_t above =
          y > 0 ? sums_[static_cast<std::size_t>(y - 1) * width_ + x] : 0;
      sums_[static_cast<std::size_t>(y) * width_ + x] = row + above;
    }
  }
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw FormatError(std::string("PGM ") + what + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("PGM header: missing ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_space() const {
    return pos_ < bytes_.size() && std::isspace(bytes_[pos_]);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw FormatError("not a PGM file");
  }
  if (bytes[1] != '5') {
    throw FormatError(std::string("unsupported PNM magic P") +
                      static_cast<char>(bytes[1]));
  }
  HeaderReader reader(bytes.subspan(2));
  const long width = reader.number("width");
  const long height = reader.number("height");
  const long maxval = reader.number("maxval");
  if (width < 1 || height < 1) throw FormatError("PGM dimensions must be positive");
  if (maxval < 1 || maxval > 255) throw FormatError("PGM maxval must be in [1, 255]");
  if (!reader.at_space()) throw FormatError("PGM header not terminated by whitespace");
  reader.advance();
  const std::size_t offset = 2 + reader.pos();
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - offset < count) throw FormatError("PGM payload truncated");
  std::vector<std::uint8_t> data(bytes.begin() + offset,
                                 bytes.begin() + offset + count);
  for (auto v : data) {
    if (v > maxval) throw FormatError("PGM sample exceeds maxval");
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height),
                   std::move(data));
}

std::vector<std::uint8_t> save_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

GrayImage read_pgm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_pgm(bytes);
}

void write_pgm_file(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const auto bytes = save_pgm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::uint8_t to_gray(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // Integer form of round_half_up(0.30 r + 0.59 g + 0.11 b).
  const int scaled = 30 * r + 59 * g + 11 * b;
  return static_cast<std::uint8_t>(std::min(255, (scaled + 50) / 100));
}

GrayImage to_gray(int width, int height, std::span<const std::uint8_t> r,
                  std::span<const std::uint8_t> g,
                  std::span<const std::uint8_t> b) {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (r.size() != n || g.size() != n || b.size() != n) {
    throw SizeError("channel size does not match image dimensions");
  }
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = to_gray(r[i], g[i], b[i]);
  return GrayImage(width, height, std::move(out));
}

IntegralImage integral_image(const GrayImage& img) { return IntegralImage(img); }

std::uint64_t rect_sum(const IntegralImage& ii, const Rect& r) {
  if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.right() > ii.width() ||
      r.bottom() > ii.height()) {
    throw BoundsError("rectangle outside integral image");
  }
  // P4 - P2 - P3 + P1 with the P1/P2/P3 corners dropped on the top/left edge.
  const int x1 = r.right() - 1;
  const int y1 = r.bottom() - 1;
  const std::uint64_t p4 = ii.at(x1, y1);
  const std::uint64_t p2 = r.y > 0 ? ii.at(x1, r.y - 1) : 0;
  const std::uint64_t p3 = r.x > 0 ? ii.at(r.x - 1, y1) : 0;
  const std::uint64_t p1 = (r.x > 0 && r.y > 0) ? ii.at(r.x - 1, r.y - 1) : 0;
  return p4 + p1 - p2 - p3;
}

std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

double sample_bilinear(const GrayImage& img, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  auto px = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= img.width() || yi >= img.height()) return 0.0;
    return img.at(xi, yi);
  };
  const double top = px(x0, y0) + ax * (px(x0 + 1, y0) - px(x0, y0));
  if (ay == 0.0) return top;
  const double bottom = px(x0, y0 + 1) + ax * (px(x0 + 1, y0 + 1) - px(x0, y0 + 1));
  return top + ay * (bottom - top);
}

namespace {

// Exact trig for multiples of 90 degrees so quarter turns are lossless.
void exact_sincos(double degrees, double& s, double& c) {
  const double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    const long q = ((static_cast<long>(std::round(quarter)) % 4) + 4) % 4;
    constexpr double kSin[] = {0.0, 1.0, 0.0, -1.0};
    constexpr double kCos[] = {1.0, 0.0, -1.0, 0.0};
    s = kSin[q];
    c = kCos[q];
    return;
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  s = std::sin(rad);
  c = std::cos(rad);
}

}  // namespace

GrayImage rotate(const GrayImage& img, double degrees) {
  double s = 0.0;
  double c = 1.0;
  exact_sincos(degrees, s, c);
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  GrayImage out(img.width(), img.height(), 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      // Inverse map: destination pixel back into the source frame. With y
      // pointing down, a counter-clockwise screen rotation by theta maps
      // (dx, dy) -> (c dx + s dy, -s dx + c dy); invert it here.
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = c * dx - s * dy + cx;
      const double sy = s * dx + c * dy + cy;
      if (sx < -0.5 || sy < -0.5 || sx > img.width() - 0.5 ||
          sy > img.height() - 0.5) {
        continue;
      }
      const double csx = std::clamp(sx, 0.0, img.width() - 1.0);
      const double csy = std::clamp(sy, 0.0, img.height() - 1.0);
      out.at(x, y) = quantize(sample_bilinear(img, csx, csy));
    }
  }
  return out;
}

GrayImage half_sample(const GrayImage& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  if (w < 1 || h < 1) throw SizeError("half_sample result would be empty");
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sum = img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                      img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
    }
  }
  return out;
}

GrayImage downsample_by(const GrayImage& img, double factor) {
  if (!(factor > 1.0)) throw ParamError("downsample factor must exceed 1");
  const int w = static_cast<int>(std::floor(img.width() / factor));
  const int h = static_cast<int>(std::floor(img.height() / factor));
  if (w < 1 || h < 1) throw SizeError("downsample result would be empty");
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Pixel centers of the coarse grid expressed in source coordinates.
      const double sx = std::clamp((x + 0.5) * factor - 0.5, 0.0, img.width() - 1.0);
      const double sy = std::clamp((y + 0.5) * factor - 0.5, 0.0, img.height() - 1.0);
      out.at(x, y) = quantize(sample_bilinear(img, sx, sy));
    }
  }
  return out;
}

GrayImage crop(const GrayImage& img, const Rect& r) {
  if (r.w < 1 || r.h < 1 || !img.bounds().contains(r)) {
    throw BoundsError("crop rectangle outside image");
  }
  GrayImage out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
  }
  return out;
}

}  // namespace lipkey
