#pragma once

#include <string>
#include <vector>

#include "lipkey/image.hpp"

namespace lipkey {

struct KeyPoint {
  Point2D location;
  double score = 0.0;
  double scale = 1.0;        // pyramid scale t; 1 for Harris
  double orientation = 0.0;  // radians
};

// Real-valued raster used for derivatives and responses.
struct RealMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RealMap() = default;
  RealMap(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

std::vector<Point2D> locations(const std::vector<KeyPoint>& kps);

// CSV with header `x,y,score,scale,orientation`, 6 significant digits.
std::string keypoints_to_csv(const std::vector<KeyPoint>& kps);
std::vector<KeyPoint> keypoints_from_csv(const std::string& text);

}  // namespace lipkey
