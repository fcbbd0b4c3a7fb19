#pragma once

#include "lipkey/image.hpp"

namespace lipkey {

// Tone-mapping parameters for the mean/variance driven enhancement curve.
// alpha is kept for configuration compatibility; the curve itself only uses
// beta (bias exponent), rho and gamma (gain weight and exponent).
struct EnhanceParams {
  double alpha = 0.125;
  double beta = 0.25;
  double rho = 0.1;
  double gamma = 0.5;

  void validate() const;
};

// Mean intensity normalized to [0, 1].
double image_mean(const GrayImage& img);
// Population variance of intensities normalized to [0, 1].
double image_variance(const GrayImage& img);

double bias(const GrayImage& img, const EnhanceParams& p);
double gain(const GrayImage& img, const EnhanceParams& p);

// Per pixel t(u) = gain * (bias^(2u) - 1), u = intensity / 255, then an
// affine rescale that sends the darkest pixel to 0 and the brightest to 255.
// Flat images (and rho = 0) are returned unchanged.
GrayImage enhance(const GrayImage& img, const EnhanceParams& p = {});

}  // namespace lipkey
