#pragma once

#include <vector>

#include "lipkey/image.hpp"
#include "lipkey/keypoint.hpp"

namespace lipkey {

struct HarrisParams {
  double sigma = 1.5;
  double k = 0.04;
  double response_threshold = 50'000.0;
  int nms_radius = 3;

  void validate() const;
};

struct Gradients {
  RealMap ix;
  RealMap iy;
};

// Unnormalized 3x3 Sobel derivatives with replicated borders.
Gradients gradients(const GrayImage& img);

// Per-pixel Gaussian-weighted sums of Ix^2, Ix*Iy and Iy^2.
struct StructureTensor {
  RealMap xx;
  RealMap xy;
  RealMap yy;
};

// Unnormalized window weights exp(-(x^2 + y^2) / (2 sigma^2)) over
// [-r, r]^2 with r = ceil(3 sigma), row-major.
std::vector<double> gaussian_window(double sigma);
int gaussian_radius(double sigma);

StructureTensor structure_tensor(const Gradients& g, double sigma);

// det(D) - k * trace(D)^2 using det = xx * yy - xy^2.
RealMap harris_response(const StructureTensor& d, double k);

// Thresholded local maxima of the response inside roi, in image coordinates,
// sorted by descending score then row-major position.
std::vector<KeyPoint> harris_detect(const GrayImage& img, const HarrisParams& p,
                                    const Rect& roi);

}  // namespace lipkey
