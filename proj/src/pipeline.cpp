#include "lipkey/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "json.hpp"
#include "lipkey/brisk.hpp"
#include "lipkey/error.hpp"
#include "lipkey/harris.hpp"
#include "lipkey/pca.hpp"
#include "lipkey/preprocess.hpp"

namespace lipkey {

Scenario parse_scenario(int n) {
  if (n < 1 || n > 3) throw ParamError("scenario must be 1, 2 or 3");
  return static_cast<Scenario>(n);
}

std::size_t Diagnostics::used_points() const {
  switch (scenario) {
    case 2: return reduced_points;
    case 3: return brisk_points;
    default: return harris_points;
  }
}

namespace {

std::vector<KeyPoint> to_local(std::vector<KeyPoint> kps, const Rect& roi) {
  for (auto& k : kps) {
    k.location.x -= roi.x;
    k.location.y -= roi.y;
  }
  return kps;
}

// Scale both axes by the midpoint of their range, as the BRISK branch of the
// decision step prescribes.
std::vector<Point2D> midrange_scaled(const std::vector<Point2D>& pts) {
  double min_x = pts.front().x, max_x = pts.front().x;
  double min_y = pts.front().y, max_y = pts.front().y;
  for (const auto& p : pts) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double ax = 0.5 * (min_x + max_x);
  const double ay = 0.5 * (min_y + max_y);
  std::vector<Point2D> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({ax * p.x, ay * p.y});
  return out;
}

}  // namespace

ScenarioKeypoints extract_keypoints(const GrayImage& img, Scenario scenario,
                                    const PipelineSettings& settings, const RoiSource& source) {
  ScenarioKeypoints out;
  out.enhanced = settings.enhance_enabled ? enhance(img, settings.enhance) : img;
  out.roi = resolve_roi(out.enhanced, source.annotation, source.face, source.mouth);
  out.harris = to_local(harris_detect(out.enhanced, settings.harris, out.roi), out.roi);
  if (scenario == Scenario::HarrisPca && out.harris.size() >= 2) {
    out.reduced = reduce_points(locations(out.harris), settings.pca_keep_fraction);
  }
  if (scenario == Scenario::HarrisBrisk) {
    const GrayImage mouth = crop(out.enhanced, out.roi);
    const ScalePyramid pyr = build_pyramid(mouth, settings.brisk_octaves);
    out.brisk = brisk_detect(pyr, settings.brisk);
    if (settings.brisk_describe) {
      for (auto& kp : out.brisk) {
        if (!pattern_fits(mouth, kp, default_pattern())) continue;
        kp.orientation = brisk_orientation(mouth, kp);
        out.descriptors.push_back(brisk_describe(mouth, kp, kp.orientation));
      }
    }
  }
  return out;
}

ScenarioResult run_scenario(const GrayImage& img, Scenario scenario, const PipelineSettings& settings,
                            const RoiSource& source) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult r;
  auto& d = r.diagnostics;
  d.scenario = static_cast<int>(scenario);
  auto finish = [&]() -> ScenarioResult {
    d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  };
  auto fail = [&](const char* reason) -> ScenarioResult {
    r.label = Expression::Unrecognized;
    r.state = State::Unrecognized;
    r.reason = reason;
    return finish();
  };

  ScenarioKeypoints kp;
  try {
    kp = extract_keypoints(img, scenario, settings, source);
  } catch (const DetectionMiss&) {
    return fail("roi-miss");
  } catch (const SizeError&) {
    return fail("roi-too-small");
  } catch (const Error&) {
    return fail("keypoint-error");
  }
  d.roi = kp.roi;
  d.harris_points = kp.harris.size();
  d.reduced_points = kp.reduced.size();
  d.brisk_points = kp.brisk.size();
  d.described_points = kp.descriptors.size();

  if (scenario != Scenario::HarrisBrisk) {
    const std::vector<Point2D> pts =
        scenario == Scenario::HarrisPca ? kp.reduced : locations(kp.harris);
    if (pts.empty()) return fail("no-keypoints");
    if (pts.size() < 3) return fail("too-few-keypoints");
    const CurvatureTest test = algo1_test(pts, settings.epsilon_y);
    d.margin = test.margin;
    r.state = State::Unrecognized;
    r.label = test.smile ? Expression::Smile : Expression::Neutral;
    return finish();
  }

  if (kp.harris.empty() || kp.brisk.empty()) return fail("no-keypoints");
  try {
    d.harris_fit = fit_quadratic(locations(kp.harris));
    const auto resampled = spline_resample(midrange_scaled(locations(kp.brisk)), settings.spline_count);
    d.brisk_fit = fit_quadratic(resampled);
  } catch (const Error&) {
    return fail("fit-failed");
  }
  try {
    d.harris_vertex = vertex(*d.harris_fit);
    d.brisk_vertex = vertex(*d.brisk_fit);
  } catch (const DegenerateError&) {
    // A flat fit is a geometric outcome, not a processing failure.
    r.state = State::Unrecognized;
    r.label = settings.state_map(r.state);
    r.reason = "degenerate-vertex";
    return finish();
  }
  d.distance = vertex_distance(*d.harris_vertex, *d.brisk_vertex);
  r.state = table2_classify(*d.harris_fit, *d.harris_vertex, *d.brisk_fit, *d.brisk_vertex,
                            settings.thresholds, settings.v_max);
  r.label = settings.state_map(r.state);
  return finish();
}

std::string diagnostics_record(const ScenarioResult& r) {
  const auto& d = r.diagnostics;
  nlohmann::ordered_json j;
  j["label"] = std::string(to_string(r.label));
  j["state"] = std::string(to_string(r.state));
  j["reason"] = r.reason;
  j["scenario"] = d.scenario;
  j["roi"] = {d.roi.x, d.roi.y, d.roi.w, d.roi.h};
  j["harris_points"] = d.harris_points;
  j["reduced_points"] = d.reduced_points;
  j["brisk_points"] = d.brisk_points;
  j["described_points"] = d.described_points;
  if (d.margin) j["margin"] = *d.margin;
  if (d.harris_fit) j["harris_fit"] = {d.harris_fit->a, d.harris_fit->b, d.harris_fit->c};
  if (d.brisk_fit) j["brisk_fit"] = {d.brisk_fit->a, d.brisk_fit->b, d.brisk_fit->c};
  if (d.harris_vertex) j["harris_vertex"] = {d.harris_vertex->x, d.harris_vertex->y};
  if (d.brisk_vertex) j["brisk_vertex"] = {d.brisk_vertex->x, d.brisk_vertex->y};
  if (d.distance) j["distance"] = *d.distance;
  j["seconds"] = d.seconds;
  return j.dump();
}

}  // namespace lipkey
