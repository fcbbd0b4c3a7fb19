#include "lipkey/harris.hpp"

#include <algorithm>
#include <cmath>

#include "lipkey/error.hpp"

namespace lipkey {

void HarrisParams::validate() const {
  if (!(sigma > 0.0)) throw ParamError("harris.sigma must be > 0");
  if (!(k >= 0.04 && k <= 0.06)) throw ParamError("harris.k must lie in [0.04, 0.06]");
  if (nms_radius < 0) throw ParamError("harris.nms_radius must be >= 0");
}

Gradients gradients(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) throw SizeError("gradients need at least 3x3 pixels");
  Gradients g{RealMap(img.width(), img.height()), RealMap(img.width(), img.height())};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto p = [&](int dx, int dy) -> double { return img.clamped(x + dx, y + dy); };
      g.ix.at(x, y) = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      g.iy.at(x, y) = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
    }
  }
  return g;
}

int gaussian_radius(double sigma) {
  if (!(sigma > 0.0)) throw ParamError("Gaussian sigma must be > 0");
  return static_cast<int>(std::ceil(3.0 * sigma));
}

std::vector<double> gaussian_window(double sigma) {
  const int r = gaussian_radius(sigma);
  const int side = 2 * r + 1;
  std::vector<double> w(static_cast<std::size_t>(side) * side);
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      w[static_cast<std::size_t>(y + r) * side + (x + r)] =
          std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
    }
  }
  return w;
}

namespace {

// Separable Gaussian window sum with clamped borders. exp(-(x^2+y^2)/2s^2)
// factors exactly into the product of two 1-D kernels.
RealMap window_sum(const RealMap& src, const std::vector<double>& kernel, int r) {
  RealMap tmp(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        acc += kernel[d + r] * src.at(std::clamp(x + d, 0, src.width - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  RealMap out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        acc += kernel[d + r] * tmp.at(x, std::clamp(y + d, 0, src.height - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

StructureTensor structure_tensor(const Gradients& g, double sigma) {
  const int r = gaussian_radius(sigma);
  std::vector<double> kernel(2 * r + 1);
  for (int d = -r; d <= r; ++d) kernel[d + r] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  const int w = g.ix.width;
  const int h = g.ix.height;
  RealMap xx(w, h), xy(w, h), yy(w, h);
  for (std::size_t i = 0; i < g.ix.data.size(); ++i) {
    const double ix = g.ix.data[i];
    const double iy = g.iy.data[i];
    xx.data[i] = ix * ix;
    xy.data[i] = ix * iy;
    yy.data[i] = iy * iy;
  }
  return {window_sum(xx, kernel, r), window_sum(xy, kernel, r), window_sum(yy, kernel, r)};
}

RealMap harris_response(const StructureTensor& d, double k) {
  RealMap out(d.xx.width, d.xx.height);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double a = d.xx.data[i];
    const double b = d.xy.data[i];
    const double c = d.yy.data[i];
    const double trace = a + c;
    out.data[i] = (a * c - b * b) - k * trace * trace;
  }
  return out;
}

std::vector<KeyPoint> harris_detect(const GrayImage& img, const HarrisParams& p,
                                    const Rect& roi) {
  p.validate();
  if (roi.w < 1 || roi.h < 1) throw SizeError("empty Harris ROI");
  if (!img.bounds().contains(roi)) throw BoundsError("Harris ROI outside image");

  // Work on the ROI plus enough context that window sums and suppression at
  // the ROI edge see real pixels instead of replicated ones.
  const int margin = gaussian_radius(p.sigma) + 1 + p.nms_radius;
  const int x0 = std::max(0, roi.x - margin);
  const int y0 = std::max(0, roi.y - margin);
  const int x1 = std::min(img.width(), roi.right() + margin);
  const int y1 = std::min(img.height(), roi.bottom() + margin);
  const Rect work{x0, y0, x1 - x0, y1 - y0};
  if (work.w < 3 || work.h < 3) return {};
  const GrayImage patch = crop(img, work);
  const RealMap response = harris_response(structure_tensor(gradients(patch), p.sigma), p.k);

  std::vector<KeyPoint> out;
  const int r = p.nms_radius;
  for (int y = roi.y; y < roi.bottom(); ++y) {
    for (int x = roi.x; x < roi.right(); ++x) {
      const int lx = x - x0;
      const int ly = y - y0;
      const double v = response.at(lx, ly);
      if (!(v > p.response_threshold)) continue;
      bool is_max = true;
      for (int dy = -r; dy <= r && is_max; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int qx = lx + dx;
          const int qy = ly + dy;
          if ((dx == 0 && dy == 0) || qx < 0 || qy < 0 || qx >= work.w || qy >= work.h) continue;
          const double q = response.at(qx, qy);
          // Plateaus keep their first pixel in row-major order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (q > v || (q == v && earlier)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({Point2D{double(x), double(y)}, v, 1.0, 0.0});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const KeyPoint& a, const KeyPoint& b) { return a.score > b.score; });
  return out;
}

}  // namespace lipkey
