#include "lipkey/roi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

#include "lipkey/error.hpp"

namespace lipkey {

namespace {

constexpr std::array<std::array<int, 2>, 8> kNeighbours = {{
    {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0},
}};

// Sub-rectangle grid of each kind: columns x rows.
std::array<int, 2> partition(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoRectHorizontal: return {2, 1};
    case HaarKind::TwoRectVertical: return {1, 2};
    case HaarKind::ThreeRect: return {3, 1};
    case HaarKind::FourRect: return {2, 2};
  }
  return {1, 1};
}

// +1 for white cells, -1 for black cells.
int cell_sign(HaarKind kind, int col, int row) {
  switch (kind) {
    case HaarKind::TwoRectHorizontal: return col == 0 ? 1 : -1;
    case HaarKind::TwoRectVertical: return row == 0 ? 1 : -1;
    case HaarKind::ThreeRect: return col == 1 ? -2 : 1;
    case HaarKind::FourRect: return col == row ? 1 : -1;
  }
  return 1;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::uint8_t lbp_code(const GrayImage& img, int x, int y) {
  if (x < 1 || y < 1 || x >= img.width() - 1 || y >= img.height() - 1) {
    throw BoundsError("LBP needs all 8 neighbours inside the image");
  }
  const auto center = img.at(x, y);
  std::uint8_t code = 0;
  for (std::size_t k = 0; k < kNeighbours.size(); ++k) {
    if (img.at(x + kNeighbours[k][0], y + kNeighbours[k][1]) >= center) {
      code = static_cast<std::uint8_t>(code | (1u << k));
    }
  }
  return code;
}

std::array<std::uint64_t, 256> lbp_histogram(const GrayImage& img, const Rect& region) {
  if (region.w < 3 || region.h < 3) throw SizeError("LBP region needs a non-empty interior");
  if (!img.bounds().contains(region)) throw BoundsError("LBP region outside image");
  std::array<std::uint64_t, 256> bins{};
  for (int y = region.y + 1; y < region.bottom() - 1; ++y) {
    for (int x = region.x + 1; x < region.right() - 1; ++x) ++bins[lbp_code(img, x, y)];
  }
  return bins;
}

std::string_view to_string(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoRectHorizontal: return "two-rect-horizontal";
    case HaarKind::TwoRectVertical: return "two-rect-vertical";
    case HaarKind::ThreeRect: return "three-rect";
    case HaarKind::FourRect: return "four-rect";
  }
  return "?";
}

HaarKind parse_haar_kind(std::string_view token) {
  for (auto k : {HaarKind::TwoRectHorizontal, HaarKind::TwoRectVertical,
                 HaarKind::ThreeRect, HaarKind::FourRect}) {
    if (token == to_string(k)) return k;
  }
  throw FormatError("unknown Haar feature kind '" + std::string(token) + "'");
}

bool HaarFeature::well_formed() const {
  const auto [nx, ny] = partition(kind);
  return rect.w >= nx && rect.h >= ny && rect.w % nx == 0 && rect.h % ny == 0 &&
         rect.x >= 0 && rect.y >= 0 && rect.right() <= kWindowSize &&
         rect.bottom() <= kWindowSize;
}

double haar_value(const IntegralImage& ii, const HaarFeature& f, Point2D origin,
                  double scale) {
  if (!f.well_formed()) throw BoundsError("Haar feature outside the base window");
  const auto [nx, ny] = partition(f.kind);
  const int cw = std::max(1, static_cast<int>(std::lround(f.rect.w / nx * scale)));
  const int ch = std::max(1, static_cast<int>(std::lround(f.rect.h / ny * scale)));
  const int x0 = static_cast<int>(std::lround(origin.x)) +
                 static_cast<int>(std::lround(f.rect.x * scale));
  const int y0 = static_cast<int>(std::lround(origin.y)) +
                 static_cast<int>(std::lround(f.rect.y * scale));
  double value = 0.0;
  for (int row = 0; row < ny; ++row) {
    for (int col = 0; col < nx; ++col) {
      const Rect cell{x0 + col * cw, y0 + row * ch, cw, ch};
      value += cell_sign(f.kind, col, row) * static_cast<double>(rect_sum(ii, cell));
    }
  }
  return value / (scale * scale);
}

std::vector<HaarFeature> enumerate_features(int stride) {
  if (stride < 1) throw ParamError("feature stride must be >= 1");
  std::vector<HaarFeature> out;
  for (auto kind : {HaarKind::TwoRectHorizontal, HaarKind::TwoRectVertical,
                    HaarKind::ThreeRect, HaarKind::FourRect}) {
    const auto [nx, ny] = partition(kind);
    for (int cw = stride; cw * nx <= kWindowSize; cw += stride) {
      for (int ch = stride; ch * ny <= kWindowSize; ch += stride) {
        for (int y = 0; y + ch * ny <= kWindowSize; y += stride) {
          for (int x = 0; x + cw * nx <= kWindowSize; x += stride) {
            out.push_back({kind, Rect{x, y, cw * nx, ch * ny}});
          }
        }
      }
    }
  }
  return out;
}

int WeakClassifier::vote(double feature_value) const {
  return polarity * feature_value < polarity * threshold ? 1 : 0;
}

TrainingResult adaboost_train(const std::vector<LabeledWindow>& samples,
                              const std::vector<HaarFeature>& features, int rounds) {
  if (rounds < 1) throw ParamError("AdaBoost needs at least one round");
  if (features.empty()) throw ParamError("AdaBoost needs a non-empty feature pool");
  const auto positives = std::count_if(samples.begin(), samples.end(),
                                       [](const auto& s) { return s.positive; });
  if (positives == 0 || positives == static_cast<long>(samples.size())) {
    throw ParamError("AdaBoost needs positive and negative samples");
  }
  const std::size_t n = samples.size();

  // Feature responses never change between rounds: compute and sort once.
  std::vector<std::vector<double>> values(features.size(), std::vector<double>(n));
  std::vector<std::vector<std::size_t>> order(features.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = samples[i].window;
    if (w.width() != kWindowSize || w.height() != kWindowSize) {
      throw SizeError("training windows must be 24x24");
    }
    const IntegralImage ii(w);
    for (std::size_t f = 0; f < features.size(); ++f) values[f][i] = haar_value(ii, features[f]);
  }
  for (std::size_t f = 0; f < features.size(); ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), std::size_t{0});
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return values[f][a] < values[f][b]; });
  }

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  TrainingResult result;
  Stage stage;
  for (int round = 0; round < rounds; ++round) {
    double total_pos = 0.0;
    double total_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (samples[i].positive ? total_pos : total_neg) += weights[i];

    double best_error = std::numeric_limits<double>::infinity();
    WeakClassifier best;
    std::size_t best_f = 0;
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto& v = values[f];
      const auto& idx = order[f];
      double below_pos = 0.0;
      double below_neg = 0.0;
      for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) {
          const auto s = idx[k - 1];
          (samples[s].positive ? below_pos : below_neg) += weights[s];
        }
        if (k > 0 && k < n && v[idx[k - 1]] == v[idx[k]]) continue;
        double threshold;
        if (k == 0) {
          threshold = v[idx[0]] - 1.0;
        } else if (k == n) {
          threshold = v[idx[n - 1]] + 1.0;
        } else {
          threshold = 0.5 * (v[idx[k - 1]] + v[idx[k]]);
        }
        // Polarity +1 votes positive below the threshold, -1 above it.
        const double err_plus = below_neg + (total_pos - below_pos);
        const double err_minus = below_pos + (total_neg - below_neg);
        if (err_plus < best_error) {
          best_error = err_plus;
          best = {features[f], threshold, 1, 0.0};
          best_f = f;
        }
        if (err_minus < best_error) {
          best_error = err_minus;
          best = {features[f], threshold, -1, 0.0};
          best_f = f;
        }
      }
    }
    best_error = std::max(0.0, best_error);
    if (best_error >= 0.5) {
      throw TrainingError("no weak classifier beats chance (weighted error >= 0.5)");
    }
    constexpr double kErrorFloor = 1e-10;
    best.weight = 0.5 * std::log((1.0 - best_error) / std::max(best_error, kErrorFloor));
    stage.weak.push_back(best);
    result.round_errors.push_back(best_error);

    // w_i <- w_i * exp(-alpha * y_i * h_i) with labels and votes in {-1, +1}.
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = samples[i].positive ? 1 : -1;
      const int h = best.vote(values[best_f][i]) ? 1 : -1;
      weights[i] *= std::exp(-best.weight * y * h);
      norm += weights[i];
    }
    for (auto& w : weights) w /= norm;
    result.round_weights.push_back(weights);
    if (best_error == 0.0) break;
  }
  double alpha_sum = 0.0;
  for (const auto& w : stage.weak) alpha_sum += w.weight;
  stage.threshold = 0.5 * alpha_sum;
  result.cascade.stages.push_back(std::move(stage));
  return result;
}

std::optional<double> cascade_score(const IntegralImage& ii, const Rect& window,
                                    const Cascade& c) {
  const double scale = static_cast<double>(window.w) / kWindowSize;
  const Point2D origin{static_cast<double>(window.x), static_cast<double>(window.y)};
  double total = 0.0;
  for (const auto& stage : c.stages) {
    double score = 0.0;
    for (const auto& weak : stage.weak) {
      score += weak.weight * weak.vote(haar_value(ii, weak.feature, origin, scale));
    }
    if (score < stage.threshold) return std::nullopt;
    total += score;
  }
  return total;
}

bool cascade_classify(const IntegralImage& ii, const Rect& window, const Cascade& c) {
  return cascade_score(ii, window, c).has_value();
}

std::optional<ScanResult> scan_windows(const IntegralImage& ii, const Rect& region,
                                       const Cascade& c, int min_size) {
  constexpr double kScaleStep = 1.25;
  constexpr int kStep = 2;
  std::optional<ScanResult> best;
  const int limit = std::min(region.w, region.h);
  for (double scale = 1.0;; scale *= kScaleStep) {
    const int size = static_cast<int>(std::lround(kWindowSize * scale));
    if (size > limit) break;
    if (size < min_size) continue;
    for (int y = region.y; y + size <= region.bottom(); y += kStep) {
      for (int x = region.x; x + size <= region.right(); x += kStep) {
        const Rect window{x, y, size, size};
        const auto score = cascade_score(ii, window, c);
        if (!score) continue;
        const bool better =
            !best || *score > best->score ||
            (*score == best->score &&
             (y < best->window.y || (y == best->window.y && x < best->window.x)));
        if (better) best = ScanResult{window, *score};
      }
    }
  }
  return best;
}

Rect detect_roi(const GrayImage& img, const Cascade& face, const Cascade& mouth) {
  if (img.width() < kWindowSize || img.height() < kWindowSize) {
    throw SizeError("image smaller than the 24x24 detection window");
  }
  const IntegralImage ii(img);
  const auto face_hit = scan_windows(ii, img.bounds(), face, 2 * kWindowSize);
  if (!face_hit) throw DetectionMiss("no face window accepted");
  const Rect& f = face_hit->window;
  const Rect lower{f.x, f.y + f.h / 2, f.w, f.h - f.h / 2};
  const auto mouth_hit = scan_windows(ii, lower, mouth);
  if (!mouth_hit) throw DetectionMiss("no mouth window accepted");
  return mouth_hit->window;
}

Rect resolve_roi(const GrayImage& img, const std::optional<Rect>& annotation,
                 const Cascade* face, const Cascade* mouth) {
  if (annotation) {
    if (annotation->w < 1 || annotation->h < 1 || !img.bounds().contains(*annotation)) {
      throw BoundsError("annotated ROI outside image");
    }
    return *annotation;
  }
  if (face && mouth) return detect_roi(img, *face, *mouth);
  return img.bounds();
}

std::string format_cascade(const Cascade& c) {
  std::string out;
  for (const auto& stage : c.stages) {
    out += "stage " + format_double(stage.threshold) + "\n";
    for (const auto& w : stage.weak) {
      const auto& r = w.feature.rect;
      out += "weak " + std::string(to_string(w.feature.kind)) + " " + std::to_string(r.x) +
             " " + std::to_string(r.y) + " " + std::to_string(r.w) + " " +
             std::to_string(r.h) + " " + std::to_string(w.polarity) + " " +
             format_double(w.threshold) + " " + format_double(w.weight) + "\n";
    }
  }
  return out;
}

Cascade parse_cascade(std::string_view text) {
  Cascade c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword)) continue;
    if (keyword == "stage") {
      Stage s;
      if (!(fields >> s.threshold)) throw ParseError(line_no, "stage needs a threshold");
      c.stages.push_back(std::move(s));
    } else if (keyword == "weak") {
      if (c.stages.empty()) throw ParseError(line_no, "weak classifier before any stage");
      std::string kind;
      WeakClassifier w;
      auto& r = w.feature.rect;
      if (!(fields >> kind >> r.x >> r.y >> r.w >> r.h >> w.polarity >> w.threshold >> w.weight)) {
        throw ParseError(line_no, "malformed weak classifier");
      }
      try {
        w.feature.kind = parse_haar_kind(kind);
      } catch (const FormatError& e) {
        throw ParseError(line_no, e.what());
      }
      if (!w.feature.well_formed()) throw ParseError(line_no, "feature does not fit the 24x24 window");
      if (w.polarity != 1 && w.polarity != -1) throw ParseError(line_no, "polarity must be +1 or -1");
      if (!std::isfinite(w.weight) || w.weight < 0.0) throw ParseError(line_no, "weight must be finite and >= 0");
      c.stages.back().weak.push_back(w);
    } else {
      throw ParseError(line_no, "unknown keyword '" + keyword + "'");
    }
    std::string extra;
    if (fields >> extra) throw ParseError(line_no, "trailing field '" + extra + "'");
  }
  if (c.stages.empty()) throw ParseError(line_no, "cascade has no stages");
  return c;
}

Cascade read_cascade_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_cascade(text);
}

void write_cascade_file(const std::filesystem::path& path, const Cascade& c) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << format_cascade(c);
}

}  // namespace lipkey
