#include "lipkey/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lipkey/error.hpp"

namespace lipkey {

namespace {

Point2D mean_of(std::span<const Point2D> points) {
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
  }
  const double n = static_cast<double>(points.size());
  return {sx / n, sy / n};
}

Point2D normalized_with_sign(double x, double y) {
  const double len = std::hypot(x, y);
  x /= len;
  y /= len;
  if (x < 0.0 || (x == 0.0 && y < 0.0)) {
    x = -x;
    y = -y;
  }
  return {x, y};
}

}  // namespace

Matrix2 covariance2d(std::span<const Point2D> points) {
  if (points.size() < 2) throw SizeError("covariance needs at least two points");
  const Point2D m = mean_of(points);
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - m.x;
    const double dy = p.y - m.y;
    xx += dx * dx;
    xy += dx * dy;
    yy += dy * dy;
  }
  const double d = static_cast<double>(points.size() - 1);
  return {{{xx / d, xy / d}, {xy / d, yy / d}}};
}

Pca2D pca_fit(std::span<const Point2D> points) {
  const Matrix2 c = covariance2d(points);
  Pca2D out;
  out.mean = mean_of(points);
  const double a = c[0][0];
  const double b = c[0][1];
  const double d = c[1][1];
  const double half_trace = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), b);
  const double l1 = half_trace + radius;
  // Vieta keeps the small root accurate when the cloud is nearly colinear.
  const double det = a * d - b * b;
  const double l2 = l1 > 0.0 ? det / l1 : half_trace - radius;
  out.eigenvalues = {l1, std::max(0.0, l2)};

  if (b == 0.0) {
    const bool x_major = a >= d;
    out.eigenvectors = {x_major ? Point2D{1.0, 0.0} : Point2D{0.0, 1.0},
                        x_major ? Point2D{0.0, 1.0} : Point2D{1.0, 0.0}};
    return out;
  }
  // (A - l1 I) v = 0: take the better conditioned of the two row solutions.
  Point2D v1 = std::abs(l1 - d) >= std::abs(l1 - a) ? normalized_with_sign(l1 - d, b)
                                                     : normalized_with_sign(b, l1 - a);
  out.eigenvectors = {v1, normalized_with_sign(-v1.y, v1.x)};
  return out;
}

std::vector<Point2D> reduce_points(std::span<const Point2D> points, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ParamError("keep fraction must lie in (0, 1]");
  }
  const Pca2D pca = pca_fit(points);
  const Point2D normal = pca.eigenvectors[1];
  const std::size_t n = points.size();
  std::vector<double> error(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double off = (points[i].x - pca.mean.x) * normal.x + (points[i].y - pca.mean.y) * normal.y;
    error[i] = off * off;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return error[a] < error[b]; });
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9));
  order.resize(std::clamp<std::size_t>(keep, 1, n));
  std::sort(order.begin(), order.end());
  std::vector<Point2D> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(points[i]);
  return out;
}

}  // namespace lipkey
