#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipkey/image.hpp"
#include "lipkey/keypoint.hpp"

namespace lipkey {

// 16-pixel Bresenham circle of radius 3, clockwise from the top pixel.
inline constexpr std::array<std::array<int, 2>, 16> kFastRing = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};
inline constexpr int kFastArc = 9;

// Segment test: at least 9 contiguous ring pixels all brighter than
// center + t or all darker than center - t, with t = threshold_rel * 255.
bool fast_ring_test(const GrayImage& img, int x, int y, double threshold_rel);
// Sum of |ring - center| - t over the winning class; 0 when the test fails.
double fast_score(const GrayImage& img, int x, int y, double threshold_rel);

struct PyramidLayer {
  GrayImage image;
  double scale = 1.0;  // t(c_i) = 2^i, t(d_i) = 1.5 * 2^i
  bool intra = false;
  int index = 0;
};

// Octaves c_0..c_{n-1} and intra-octaves d_0..d_{n-2}, ordered by scale.
struct ScalePyramid {
  std::vector<PyramidLayer> layers;

  const PyramidLayer& octave(int i) const;
  const PyramidLayer& intra_octave(int i) const;
  int octave_count() const;
};

ScalePyramid build_pyramid(const GrayImage& img, int octaves = 4);

struct BriskDetectParams {
  double threshold_rel = 0.01;
};

// FAST corners on every layer, 3x3 suppression within the layer and score
// suppression against the adjacent layers; locations are in c_0 pixels.
std::vector<KeyPoint> brisk_detect(const ScalePyramid& pyr, const BriskDetectParams& p = {});

struct PatternPoint {
  Point2D offset;  // at unit scale
  double sigma = 0.0;
};

// Concentric-ring sampling pattern with its short (descriptor) and long
// (orientation) pair lists. Built deterministically; identical everywhere.
struct BriskPattern {
  std::vector<PatternPoint> points;
  std::vector<std::pair<int, int>> short_pairs;  // exactly kDescriptorBits
  std::vector<std::pair<int, int>> long_pairs;
  double sigma_max = 9.75;
  double sigma_min = 13.67;
};

inline constexpr int kDescriptorBits = 512;

const BriskPattern& default_pattern();
BriskPattern make_pattern(std::span<const double> radii, std::span<const int> counts,
                          double sigma_max, double sigma_min);

// True when every (scaled, possibly rotated) sample fits inside img.
bool pattern_fits(const GrayImage& img, const KeyPoint& kp, const BriskPattern& pattern);

// Gaussian-smoothed intensity at a real image location.
double smoothed_intensity(const GrayImage& img, Point2D at, double sigma);

// Mean long-pair gradient in the image frame (y down), gray levels per pixel.
Point2D brisk_gradient(const GrayImage& img, const KeyPoint& kp,
                       const BriskPattern& pattern = default_pattern());

// atan2 of brisk_gradient; 0 when the gradient vanishes.
double brisk_orientation(const GrayImage& img, const KeyPoint& kp,
                         const BriskPattern& pattern = default_pattern());

class BriskDescriptor {
 public:
  static constexpr int kBits = kDescriptorBits;

  bool bit(int k) const { return (words_[k / 64] >> (k % 64)) & 1u; }
  void set(int k, bool on);
  BriskDescriptor operator~() const;

  std::string to_hex() const;
  static BriskDescriptor from_hex(std::string_view hex);

  const std::array<std::uint64_t, kBits / 64>& words() const { return words_; }
  friend bool operator==(const BriskDescriptor&, const BriskDescriptor&) = default;

 private:
  std::array<std::uint64_t, kBits / 64> words_{};
};

// Bit k = I(second point of short pair k) > I(first point), pattern rotated
// by `orientation`. Throws BoundsError when the pattern leaves img.
BriskDescriptor brisk_describe(const GrayImage& img, const KeyPoint& kp, double orientation,
                               const BriskPattern& pattern = default_pattern());

int hamming(const BriskDescriptor& a, const BriskDescriptor& b);
// Raw packed descriptors; throws ParamError on a length mismatch.
int hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace lipkey
