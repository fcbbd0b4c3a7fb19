#include "lipkey/brisk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "lipkey/error.hpp"

namespace lipkey {

namespace {

constexpr int kRingRadius = 3;

// Classifies ring pixels: +1 brighter, -1 darker, 0 similar.
std::array<int, 16> classify_ring(const GrayImage& img, int x, int y, double t) {
  if (x < kRingRadius || y < kRingRadius || x >= img.width() - kRingRadius ||
      y >= img.height() - kRingRadius) {
    throw BoundsError("FAST ring leaves the image");
  }
  const double c = img.at(x, y);
  std::array<int, 16> cls{};
  for (std::size_t i = 0; i < kFastRing.size(); ++i) {
    const double p = img.at(x + kFastRing[i][0], y + kFastRing[i][1]);
    cls[i] = p > c + t ? 1 : (p < c - t ? -1 : 0);
  }
  return cls;
}

bool has_arc(const std::array<int, 16>& cls, int sign) {
  int run = 0;
  // Two laps cover arcs that wrap past index 15.
  for (int i = 0; i < 32; ++i) {
    run = cls[i % 16] == sign ? run + 1 : 0;
    if (run >= kFastArc) return true;
  }
  return false;
}

}  // namespace

bool fast_ring_test(const GrayImage& img, int x, int y, double threshold_rel) {
  const auto cls = classify_ring(img, x, y, threshold_rel * 255.0);
  return has_arc(cls, 1) || has_arc(cls, -1);
}

double fast_score(const GrayImage& img, int x, int y, double threshold_rel) {
  const double t = threshold_rel * 255.0;
  const auto cls = classify_ring(img, x, y, t);
  const bool bright = has_arc(cls, 1);
  const bool dark = has_arc(cls, -1);
  if (!bright && !dark) return 0.0;
  const double c = img.at(x, y);
  double sum_bright = 0.0;
  double sum_dark = 0.0;
  for (std::size_t i = 0; i < kFastRing.size(); ++i) {
    const double p = img.at(x + kFastRing[i][0], y + kFastRing[i][1]);
    if (cls[i] > 0) sum_bright += p - c - t;
    if (cls[i] < 0) sum_dark += c - p - t;
  }
  return std::max(bright ? sum_bright : 0.0, dark ? sum_dark : 0.0);
}

const PyramidLayer& ScalePyramid::octave(int i) const {
  for (const auto& l : layers) {
    if (!l.intra && l.index == i) return l;
  }
  throw BoundsError("no such octave");
}

const PyramidLayer& ScalePyramid::intra_octave(int i) const {
  for (const auto& l : layers) {
    if (l.intra && l.index == i) return l;
  }
  throw BoundsError("no such intra-octave");
}

int ScalePyramid::octave_count() const {
  return static_cast<int>(std::count_if(layers.begin(), layers.end(),
                                        [](const PyramidLayer& l) { return !l.intra; }));
}

ScalePyramid build_pyramid(const GrayImage& img, int octaves) {
  if (octaves < 1) throw ParamError("pyramid needs at least one octave");
  if (img.width() < 24 || img.height() < 24) throw SizeError("pyramid input smaller than 24x24");
  if ((img.width() >> (octaves - 1)) < 1 || (img.height() >> (octaves - 1)) < 1) {
    throw SizeError("too many octaves for the input size");
  }
  std::vector<GrayImage> c{img};
  for (int i = 1; i < octaves; ++i) c.push_back(half_sample(c.back()));
  ScalePyramid pyr;
  for (int i = 0; i < octaves; ++i) {
    pyr.layers.push_back({c[i], std::ldexp(1.0, i), false, i});
    if (i + 1 < octaves) {
      const int w = static_cast<int>(std::floor(c[i].width() / 1.5));
      const int h = static_cast<int>(std::floor(c[i].height() / 1.5));
      if (w >= 1 && h >= 1) {
        pyr.layers.push_back({downsample_by(c[i], 1.5), 1.5 * std::ldexp(1.0, i), true, i});
      }
    }
  }
  return pyr;
}

namespace {

RealMap score_map(const GrayImage& img, double threshold_rel) {
  RealMap s(img.width(), img.height(), 0.0);
  for (int y = kRingRadius; y < img.height() - kRingRadius; ++y) {
    for (int x = kRingRadius; x < img.width() - kRingRadius; ++x) {
      s.at(x, y) = fast_score(img, x, y, threshold_rel);
    }
  }
  return s;
}

// Largest score in the 3x3 block around the layer pixel nearest to a c_0
// location.
double neighbour_layer_score(const RealMap& s, double layer_scale, Point2D base) {
  const int cx = static_cast<int>(std::lround((base.x + 0.5) / layer_scale - 0.5));
  const int cy = static_cast<int>(std::lround((base.y + 0.5) / layer_scale - 0.5));
  double best = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      if (x >= 0 && y >= 0 && x < s.width && y < s.height) best = std::max(best, s.at(x, y));
    }
  }
  return best;
}

}  // namespace

std::vector<KeyPoint> brisk_detect(const ScalePyramid& pyr, const BriskDetectParams& p) {
  std::vector<RealMap> scores;
  scores.reserve(pyr.layers.size());
  for (const auto& layer : pyr.layers) scores.push_back(score_map(layer.image, p.threshold_rel));

  std::vector<KeyPoint> out;
  for (std::size_t li = 0; li < pyr.layers.size(); ++li) {
    const auto& s = scores[li];
    const double t = pyr.layers[li].scale;
    for (int y = kRingRadius; y < s.height - kRingRadius; ++y) {
      for (int x = kRingRadius; x < s.width - kRingRadius; ++x) {
        const double v = s.at(x, y);
        if (v <= 0.0) continue;
        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const double q = s.at(x + dx, y + dy);
            const bool earlier = dy < 0 || (dy == 0 && dx < 0);
            if (q > v || (q == v && earlier)) {
              is_max = false;
              break;
            }
          }
        }
        if (!is_max) continue;
        const Point2D base{(x + 0.5) * t - 0.5, (y + 0.5) * t - 0.5};
        // Ties between adjacent layers go to the finer one.
        if (li > 0 && !(v > neighbour_layer_score(scores[li - 1], pyr.layers[li - 1].scale, base))) {
          continue;
        }
        if (li + 1 < scores.size() &&
            v < neighbour_layer_score(scores[li + 1], pyr.layers[li + 1].scale, base)) {
          continue;
        }
        out.push_back({base, v, t, 0.0});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const KeyPoint& a, const KeyPoint& b) { return a.score > b.score; });
  return out;
}

BriskPattern make_pattern(std::span<const double> radii, std::span<const int> counts,
                          double sigma_max, double sigma_min) {
  if (radii.size() != counts.size() || radii.empty()) {
    throw ParamError("pattern radii and counts must pair up");
  }
  if (sigma_max > sigma_min) throw ParamError("sigma_max must not exceed sigma_min");
  BriskPattern pat;
  pat.sigma_max = sigma_max;
  pat.sigma_min = sigma_min;
  for (std::size_t ring = 0; ring < radii.size(); ++ring) {
    // Smoothing follows the radial gap to the next-inner ring; the center
    // point takes half of the first gap.
    const double gap = ring == 0 ? (radii.size() > 1 ? radii[1] : 1.0) * 0.5
                                 : radii[ring] - radii[ring - 1];
    const double sigma = 0.5 * gap;
    const int n = counts[ring];
    // Odd rings are offset by half a step so neighbouring rings interleave.
    const double phase = ring % 2 == 1 ? std::numbers::pi / n : 0.0;
    for (int k = 0; k < n; ++k) {
      const double a = phase + 2.0 * std::numbers::pi * k / n;
      pat.points.push_back({Point2D{radii[ring] * std::cos(a), radii[ring] * std::sin(a)}, sigma});
    }
  }

  struct Candidate {
    long long key;  // distance quantized to 1e-9 so ties resolve identically everywhere
    int i;
    int j;
  };
  std::vector<Candidate> shorts;
  const int n = static_cast<int>(pat.points.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const double d = std::hypot(pat.points[i].offset.x - pat.points[j].offset.x,
                                  pat.points[i].offset.y - pat.points[j].offset.y);
      const long long key = std::llround(d * 1e9);
      if (d < sigma_max) shorts.push_back({key, j, i});
      if (d > sigma_min) pat.long_pairs.emplace_back(j, i);
    }
  }
  std::stable_sort(shorts.begin(), shorts.end(), [](const Candidate& a, const Candidate& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (shorts.size() < static_cast<std::size_t>(kDescriptorBits)) {
    throw ParamError("pattern has fewer than 512 short pairs");
  }
  shorts.resize(kDescriptorBits);
  for (const auto& c : shorts) pat.short_pairs.emplace_back(c.i, c.j);
  std::sort(pat.long_pairs.begin(), pat.long_pairs.end());
  if (pat.long_pairs.empty()) throw ParamError("pattern has no long pairs");
  return pat;
}

const BriskPattern& default_pattern() {
  static const BriskPattern pattern = [] {
    constexpr std::array<double, 4> radii = {0.0, 2.9, 4.9, 7.4};
    constexpr std::array<int, 4> counts = {1, 11, 19, 29};
    return make_pattern(radii, counts, 9.75, 13.67);
  }();
  return pattern;
}

namespace {

constexpr double kSmoothingReach = 2.0;  // taps extend to 2 sigma

double pattern_extent(const BriskPattern& pattern, double scale) {
  double r = 0.0;
  for (const auto& p : pattern.points) {
    r = std::max(r, (std::hypot(p.offset.x, p.offset.y) + kSmoothingReach * p.sigma) * scale);
  }
  return r;
}

std::vector<double> sample_pattern(const GrayImage& img, const KeyPoint& kp,
                                   const BriskPattern& pattern, double angle) {
  if (!pattern_fits(img, kp, pattern)) throw BoundsError("sampling pattern leaves the image");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<double> values;
  values.reserve(pattern.points.size());
  for (const auto& p : pattern.points) {
    const double ox = p.offset.x * kp.scale;
    const double oy = p.offset.y * kp.scale;
    const Point2D at{kp.location.x + c * ox - s * oy, kp.location.y + s * ox + c * oy};
    values.push_back(smoothed_intensity(img, at, p.sigma * kp.scale));
  }
  return values;
}

}  // namespace

bool pattern_fits(const GrayImage& img, const KeyPoint& kp, const BriskPattern& pattern) {
  const double r = pattern_extent(pattern, kp.scale);
  return kp.location.x - r >= 0.0 && kp.location.y - r >= 0.0 &&
         kp.location.x + r <= img.width() - 1.0 && kp.location.y + r <= img.height() - 1.0;
}

double smoothed_intensity(const GrayImage& img, Point2D at, double sigma) {
  if (sigma < 0.5) return sample_bilinear(img, at.x, at.y);
  // Taps on a grid no finer than one pixel and at most 9 per axis.
  const double reach = kSmoothingReach * sigma;
  const double step = std::max(1.0, reach / 4.0);
  const int taps = static_cast<int>(std::floor(reach / step));
  double acc = 0.0;
  double norm = 0.0;
  for (int j = -taps; j <= taps; ++j) {
    for (int i = -taps; i <= taps; ++i) {
      const double dx = i * step;
      const double dy = j * step;
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      acc += w * sample_bilinear(img, at.x + dx, at.y + dy);
      norm += w;
    }
  }
  return acc / norm;
}

Point2D brisk_gradient(const GrayImage& img, const KeyPoint& kp, const BriskPattern& pattern) {
  if (pattern.long_pairs.empty()) throw ParamError("pattern has no long pairs");
  const auto values = sample_pattern(img, kp, pattern, 0.0);
  double gx = 0.0;
  double gy = 0.0;
  for (const auto& [i, j] : pattern.long_pairs) {
    const double dx = (pattern.points[j].offset.x - pattern.points[i].offset.x) * kp.scale;
    const double dy = (pattern.points[j].offset.y - pattern.points[i].offset.y) * kp.scale;
    const double k = (values[j] - values[i]) / (dx * dx + dy * dy);
    gx += dx * k;
    gy += dy * k;
  }
  const auto n = static_cast<double>(pattern.long_pairs.size());
  return {gx / n, gy / n};
}

double brisk_orientation(const GrayImage& img, const KeyPoint& kp, const BriskPattern& pattern) {
  const Point2D g = brisk_gradient(img, kp, pattern);
  constexpr double kVanishing = 1e-9;
  if (std::hypot(g.x, g.y) < kVanishing) return 0.0;
  return std::atan2(g.y, g.x);
}

void BriskDescriptor::set(int k, bool on) {
  const std::uint64_t mask = std::uint64_t{1} << (k % 64);
  if (on) {
    words_[k / 64] |= mask;
  } else {
    words_[k / 64] &= ~mask;
  }
}

BriskDescriptor BriskDescriptor::operator~() const {
  BriskDescriptor d;
  for (std::size_t i = 0; i < words_.size(); ++i) d.words_[i] = ~words_[i];
  return d;
}

std::string BriskDescriptor::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(kBits / 4);
  // Bit 0 is the low nibble of the first byte, two hex digits per byte.
  for (int byte = 0; byte < kBits / 8; ++byte) {
    const auto v = static_cast<unsigned>((words_[byte / 8] >> (8 * (byte % 8))) & 0xffu);
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xfu]);
  }
  return out;
}

BriskDescriptor BriskDescriptor::from_hex(std::string_view hex) {
  if (hex.size() != kBits / 4) throw ParamError("descriptor hex must be 128 characters");
  auto nibble = [](char ch) -> unsigned {
    if (ch >= '0' && ch <= '9') return static_cast<unsigned>(ch - '0');
    if (ch >= 'a' && ch <= 'f') return static_cast<unsigned>(ch - 'a' + 10);
    if (ch >= 'A' && ch <= 'F') return static_cast<unsigned>(ch - 'A' + 10);
    throw ParamError("invalid hex digit in descriptor");
  };
  BriskDescriptor d;
  for (int byte = 0; byte < kBits / 8; ++byte) {
    const std::uint64_t v = (nibble(hex[2 * byte]) << 4) | nibble(hex[2 * byte + 1]);
    d.words_[byte / 8] |= v << (8 * (byte % 8));
  }
  return d;
}

BriskDescriptor brisk_describe(const GrayImage& img, const KeyPoint& kp, double orientation,
                               const BriskPattern& pattern) {
  if (pattern.short_pairs.size() != static_cast<std::size_t>(kDescriptorBits)) {
    throw ParamError("pattern must carry exactly 512 short pairs");
  }
  const auto values = sample_pattern(img, kp, pattern, orientation);
  BriskDescriptor d;
  for (int k = 0; k < kDescriptorBits; ++k) {
    const auto [first, second] = pattern.short_pairs[k];
    d.set(k, values[second] > values[first]);
  }
  return d;
}

int hamming(const BriskDescriptor& a, const BriskDescriptor& b) {
  int bits = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) bits += std::popcount(a.words()[i] ^ b.words()[i]);
  return bits;
}

int hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw ParamError("descriptor length mismatch");
  int bits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) bits += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
  return bits;
}

}  // namespace lipkey
