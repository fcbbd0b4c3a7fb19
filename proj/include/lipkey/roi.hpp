#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lipkey/image.hpp"

namespace lipkey {

// 8-neighbour local binary pattern. Bit k is set iff neighbour k >= center,
// neighbours enumerated clockwise starting at the top-left pixel.
std::uint8_t lbp_code(const GrayImage& img, int x, int y);

// Code histogram over the interior pixels of region (its 1-pixel rim is
// excluded because those pixels lack a full neighbourhood inside region).
std::array<std::uint64_t, 256> lbp_histogram(const GrayImage& img, const Rect& region);

inline constexpr int kWindowSize = 24;

enum class HaarKind {
  TwoRectHorizontal,  // white left | black right
  TwoRectVertical,    // white top / black bottom
  ThreeRect,          // white | black | white, side by side; black counts twice
  FourRect,           // white TL + BR, black TR + BL
};

std::string_view to_string(HaarKind kind);
HaarKind parse_haar_kind(std::string_view token);

struct HaarFeature {
  HaarKind kind = HaarKind::TwoRectHorizontal;
  Rect rect;  // inside the 24x24 base window

  // True when rect splits into the kind's sub-rectangles with whole pixels.
  bool well_formed() const;
};

// (white sum) - (black sum) for the feature placed at `origin`, with the
// feature geometry multiplied by `scale`. Values are divided by scale^2 so a
// scaled window produces comparable responses.
double haar_value(const IntegralImage& ii, const HaarFeature& f, Point2D origin = {},
                  double scale = 1.0);

// Every well-formed feature of the four kinds inside the base window whose
// sub-rectangle sides are multiples of `stride` pixels.
std::vector<HaarFeature> enumerate_features(int stride = 4);

struct WeakClassifier {
  HaarFeature feature;
  double threshold = 0.0;
  int polarity = 1;     // +1 or -1
  double weight = 0.0;  // boosting alpha

  // 1 when polarity * value < polarity * threshold.
  int vote(double feature_value) const;
};

struct Stage {
  std::vector<WeakClassifier> weak;
  double threshold = 0.0;
};

struct Cascade {
  std::vector<Stage> stages;
};

struct LabeledWindow {
  GrayImage window;  // 24x24
  bool positive = false;
};

struct TrainingResult {
  Cascade cascade;  // one stage holding the selected weak classifiers
  std::vector<double> round_errors;
  // Sample weights after each round's update (normalized).
  std::vector<std::vector<double>> round_weights;
};

// Discrete AdaBoost over the given feature pool. Ties between candidate
// classifiers go to the lowest feature index, then the lowest threshold.
TrainingResult adaboost_train(const std::vector<LabeledWindow>& samples,
                              const std::vector<HaarFeature>& features, int rounds);

// Sum of all stage scores when every stage accepts; nullopt on rejection.
std::optional<double> cascade_score(const IntegralImage& ii, const Rect& window,
                                    const Cascade& c);
bool cascade_classify(const IntegralImage& ii, const Rect& window, const Cascade& c);

struct ScanResult {
  Rect window;
  double score = 0.0;
};

// Best accepted square window inside `region` over a 1.25 scale pyramid with
// a 2-pixel step. Highest score wins; ties go to the top-left-most window,
// then the smaller one. Windows smaller than min_size are not tried.
std::optional<ScanResult> scan_windows(const IntegralImage& ii, const Rect& region,
                                       const Cascade& c, int min_size = kWindowSize);

// Face first, then the mouth within the lower half of the best face. Face
// windows start at twice the base size so that lower half fits a mouth window.
// Throws DetectionMiss when either cascade accepts nothing.
Rect detect_roi(const GrayImage& img, const Cascade& face, const Cascade& mouth);

// Annotation wins; otherwise the cascades are run.
Rect resolve_roi(const GrayImage& img, const std::optional<Rect>& annotation,
                 const Cascade* face, const Cascade* mouth);

std::string format_cascade(const Cascade& c);
Cascade parse_cascade(std::string_view text);
Cascade read_cascade_file(const std::filesystem::path& path);
void write_cascade_file(const std::filesystem::path& path, const Cascade& c);

}  // namespace lipkey
