#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lipkey/config.hpp"
#include "lipkey/pipeline.hpp"
#include "lipkey/roi.hpp"

namespace lipkey {

// Error taxonomy tags a manifest row may carry.
inline constexpr std::array<std::string_view, 5> kErrorCategories = {
    "mustache", "beard_mustache", "wrinkles", "low_quality", "none"};

// The labels metrics are reported for, in report order.
inline constexpr std::array<Expression, 3> kLabels = {Expression::Neutral, Expression::Smile,
                                                     Expression::Laugh};

struct ManifestEntry {
  std::filesystem::path image_path;
  Expression label = Expression::Neutral;
  std::optional<Rect> roi;
  std::string category = "none";
};

// CSV with header `path,label,x,y,w,h,category`. The ROI fields are all
// empty or all set; an empty category reads as "none". Relative paths are
// resolved against base_dir. Throws ParseError with the 1-based line.
std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path& base_dir = {});
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
std::string format_manifest(const std::vector<ManifestEntry>& entries);

struct EvalOptions {
  PipelineSettings settings;
  int workers = 0;  // 0: hardware concurrency
  std::optional<Cascade> face;
  std::optional<Cascade> mouth;
  double rotation_step = 1.0;
  double rotation_max = 90.0;
};

// Reads eval.* and loads the roi.* cascade files when both are named.
EvalOptions eval_options(const Config& c);

struct EntryOutcome {
  std::filesystem::path image_path;
  Expression truth = Expression::Neutral;
  Expression predicted = Expression::Unrecognized;
  std::string category = "none";
  bool failed = false;  // image unreadable or ROI outside it
  std::string reason;
  std::size_t keypoints = 0;
  double seconds = 0.0;
};

struct LabelMetrics {
  Expression label = Expression::Neutral;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct CategoryRate {
  std::string category;
  std::size_t errors = 0;
  std::size_t count = 0;
  double within = 0.0;   // errors / images carrying the tag
  double overall = 0.0;  // errors / all images
};

struct RotationSummary {
  std::size_t images = 0;   // swept
  std::size_t skipped = 0;  // wrong at 0 degrees
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct EvalReport {
  int scenario = 0;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t failed = 0;
  double accuracy = 0.0;
  std::vector<LabelMetrics> labels;
  std::vector<CategoryRate> categories;  // tags present in the manifest
  std::size_t keypoints_min = 0;
  std::size_t keypoints_max = 0;
  double mean_seconds = 0.0;  // over images that did not fail
  std::optional<RotationSummary> rotation;
  std::vector<EntryOutcome> outcomes;  // manifest order, not serialized
};

// Metrics from per-image outcomes. `unrecognized` is a miss for the true
// label and a false positive for nobody. Ratios with a zero denominator are 0.
EvalReport summarize(int scenario, const std::vector<EntryOutcome>& outcomes);

// Runs the scenario over every entry on a bounded worker pool.
EvalReport evaluate(const std::vector<ManifestEntry>& manifest, Scenario scenario,
                    const EvalOptions& options);

// Bounding box of r rotated with the image by `degrees` (same convention as
// rotate), clipped to the image.
Rect rotate_rect(const Rect& r, int width, int height, double degrees);

struct RotationTolerance {
  std::filesystem::path image_path;
  bool skipped = false;  // N/A: misclassified at 0 degrees
  Expression baseline = Expression::Unrecognized;
  double positive = 0.0;  // last counter-clockwise angle with the 0 degree label
  double negative = 0.0;  // same, clockwise (as a magnitude)
};

struct RotationSweep {
  std::vector<RotationTolerance> images;
  RotationSummary summary;  // over both directions of every swept image
};

// Rotates each image in +-step increments up to max until the prediction
// changes. The manifest ROI, when present, is rotated along with the image.
RotationSweep rotation_sweep(const std::vector<ManifestEntry>& manifest, Scenario scenario,
                             const EvalOptions& options);

enum class ReportFormat { Csv, Markdown };

ReportFormat parse_report_format(std::string_view s);

// CSV rows are `metric,group,value` with values at 6 significant digits.
std::string emit_report(const EvalReport& report, ReportFormat format);
// Inverse of the CSV form (outcomes are not restored).
EvalReport parse_report_csv(std::string_view text);

}  // namespace lipkey
