#include "lipkey/keypoint.hpp"

#include <cstdio>
#include <sstream>

#include "lipkey/error.hpp"

namespace lipkey {

std::vector<Point2D> locations(const std::vector<KeyPoint>& kps) {
  std::vector<Point2D> out;
  out.reserve(kps.size());
  for (const auto& k : kps) out.push_back(k.location);
  return out;
}

std::string keypoints_to_csv(const std::vector<KeyPoint>& kps) {
  std::string out = "x,y,score,scale,orientation\n";
  char buf[160];
  for (const auto& k : kps) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g\n", k.location.x, k.location.y,
                  k.score, k.scale, k.orientation);
    out += buf;
  }
  return out;
}

std::vector<KeyPoint> keypoints_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<KeyPoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "x,y,score,scale,orientation") throw ParseError(1, "unexpected keypoint CSV header");
      continue;
    }
    if (line.empty()) continue;
    KeyPoint k;
    char c1, c2, c3, c4;
    std::istringstream fields(line);
    if (!(fields >> k.location.x >> c1 >> k.location.y >> c2 >> k.score >> c3 >> k.scale >> c4 >>
          k.orientation) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw ParseError(line_no, "malformed keypoint row");
    }
    out.push_back(k);
  }
  return out;
}

}  // namespace lipkey
