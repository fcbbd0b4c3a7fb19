#pragma once

#include <array>
#include <span>
#include <vector>

#include "lipkey/image.hpp"

namespace lipkey {

using Matrix2 = std::array<std::array<double, 2>, 2>;

// Principal axes of a 2-D point cloud; eigenvalues sorted descending.
struct Pca2D {
  Point2D mean;
  std::array<Point2D, 2> eigenvectors;
  std::array<double, 2> eigenvalues{};
};

// Sample covariance (n - 1 denominator). Needs at least two points.
Matrix2 covariance2d(std::span<const Point2D> points);

// Closed-form symmetric 2x2 eigendecomposition. Each eigenvector's first
// nonzero component is positive.
Pca2D pca_fit(std::span<const Point2D> points);

// Keeps the ceil(fraction * n) points closest to the first principal axis
// (squared reconstruction error), in their original order. Equal errors keep
// the earlier point.
std::vector<Point2D> reduce_points(std::span<const Point2D> points, double keep_fraction = 0.5);

}  // namespace lipkey
