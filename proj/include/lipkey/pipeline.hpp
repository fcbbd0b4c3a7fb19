#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lipkey/config.hpp"
#include "lipkey/image.hpp"
#include "lipkey/keypoint.hpp"
#include "lipkey/recognize.hpp"
#include "lipkey/roi.hpp"

namespace lipkey {

enum class Scenario { Harris = 1, HarrisPca = 2, HarrisBrisk = 3 };

Scenario parse_scenario(int n);

struct Diagnostics {
  int scenario = 0;
  Rect roi;
  std::size_t harris_points = 0;
  std::size_t reduced_points = 0;
  std::size_t brisk_points = 0;
  std::size_t described_points = 0;
  std::optional<double> margin;  // scenarios 1-2
  std::optional<Quadratic> harris_fit;
  std::optional<Quadratic> brisk_fit;
  std::optional<Vertex> harris_vertex;
  std::optional<Vertex> brisk_vertex;
  std::optional<double> distance;
  double seconds = 0.0;

  // Keypoints fed to the decision step (Harris, reduced, or BRISK).
  std::size_t used_points() const;
};

struct ScenarioResult {
  Expression label = Expression::Unrecognized;
  State state = State::Unrecognized;
  std::string reason;  // empty on a clean decision
  Diagnostics diagnostics;
};

// How a mouth region is obtained when the caller does not annotate one.
struct RoiSource {
  std::optional<Rect> annotation;
  const Cascade* face = nullptr;
  const Cascade* mouth = nullptr;
};

// Keypoints a scenario works with, in ROI-local coordinates.
struct ScenarioKeypoints {
  Rect roi;
  GrayImage enhanced;  // the full preprocessed image
  std::vector<KeyPoint> harris;
  std::vector<Point2D> reduced;  // scenario 2
  std::vector<KeyPoint> brisk;   // scenario 3, with orientation when described
  std::vector<BriskDescriptor> descriptors;
};

ScenarioKeypoints extract_keypoints(const GrayImage& img, Scenario scenario,
                                    const PipelineSettings& settings, const RoiSource& roi);

// Preprocess, locate the mouth, extract keypoints and decide. Processing
// errors end as an unrecognized label with a reason code, never a throw.
ScenarioResult run_scenario(const GrayImage& img, Scenario scenario, const PipelineSettings& settings,
                            const RoiSource& roi = {});

// One-line JSON record of a result.
std::string diagnostics_record(const ScenarioResult& r);

}  // namespace lipkey
