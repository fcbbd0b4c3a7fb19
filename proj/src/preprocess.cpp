#include "lipkey/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lipkey/error.hpp"

namespace lipkey {

namespace {

constexpr double kFlatVariance = 1e-12;

std::array<std::size_t, 256> histogram(const GrayImage& img) {
  std::array<std::size_t, 256> h{};
  for (auto v : img.pixels()) ++h[v];
  return h;
}

}  // namespace

void EnhanceParams::validate() const {
  if (!(beta > 0.0)) throw ParamError("enhance.beta must be > 0");
  if (!(gamma > 0.0)) throw ParamError("enhance.gamma must be > 0");
  if (!(rho >= 0.0)) throw ParamError("enhance.rho must be >= 0");
  if (!std::isfinite(alpha)) throw ParamError("enhance.alpha must be finite");
}

double image_mean(const GrayImage& img) {
  const auto h = histogram(img);
  double sum = 0.0;
  for (int v = 0; v < 256; ++v) sum += static_cast<double>(h[v]) * v;
  return sum / (255.0 * static_cast<double>(img.pixels().size()));
}

double image_variance(const GrayImage& img) {
  const auto h = histogram(img);
  const double mu = image_mean(img);
  double acc = 0.0;
  for (int v = 0; v < 256; ++v) {
    const double d = v / 255.0 - mu;
    acc += static_cast<double>(h[v]) * d * d;
  }
  return acc / static_cast<double>(img.pixels().size());
}

double bias(const GrayImage& img, const EnhanceParams& p) {
  return std::pow(image_mean(img), p.beta);
}

double gain(const GrayImage& img, const EnhanceParams& p) {
  return p.rho * std::pow(image_variance(img), p.gamma);
}

GrayImage enhance(const GrayImage& img, const EnhanceParams& p) {
  p.validate();
  if (image_variance(img) < kFlatVariance) return img;
  const double b = bias(img, p);
  const double g = gain(img, p);
  auto curve = [&](int v) { return g * (std::pow(b, 2.0 * v / 255.0) - 1.0); };

  const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  const double t_lo = curve(*lo_it);
  const double t_hi = curve(*hi_it);
  const double span = t_hi - t_lo;
  if (span == 0.0 || !std::isfinite(span)) return img;

  // The curve may be decreasing (bias < 1); normalizing by the signed span
  // keeps the mapping increasing in the input intensity either way.
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    lut[v] = quantize(255.0 * (curve(v) - t_lo) / span);
  }
  lut[*lo_it] = 0;
  lut[*hi_it] = 255;
  GrayImage out(img.width(), img.height());
  std::transform(img.pixels().begin(), img.pixels().end(), out.pixels().begin(),
                 [&](std::uint8_t v) { return lut[v]; });
  return out;
}

}  // namespace lipkey
