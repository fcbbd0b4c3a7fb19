#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lipkey/error.hpp"
#include "lipkey/roi.hpp"
#include "support.hpp"

using namespace lipkey;
using lipkey::test::brute_sum;
using lipkey::test::random_image;

namespace {

// Brute-force feature value from raw pixel sums, following the documented
// white/black layout of each kind.
long long brute_haar(const GrayImage& img, const HaarFeature& f, int ox, int oy) {
  const Rect& r = f.rect;
  auto sum = [&](int x, int y, int w, int h) {
    return static_cast<long long>(brute_sum(img, {ox + x, oy + y, w, h}));
  };
  switch (f.kind) {
    case HaarKind::TwoRectHorizontal:
      return sum(r.x, r.y, r.w / 2, r.h) - sum(r.x + r.w / 2, r.y, r.w / 2, r.h);
    case HaarKind::TwoRectVertical:
      return sum(r.x, r.y, r.w, r.h / 2) - sum(r.x, r.y + r.h / 2, r.w, r.h / 2);
    case HaarKind::ThreeRect: {
      const int c = r.w / 3;
      return sum(r.x, r.y, c, r.h) - 2 * sum(r.x + c, r.y, c, r.h) + sum(r.x + 2 * c, r.y, c, r.h);
    }
    case HaarKind::FourRect: {
      const int cw = r.w / 2, ch = r.h / 2;
      return sum(r.x, r.y, cw, ch) + sum(r.x + cw, r.y + ch, cw, ch) - sum(r.x + cw, r.y, cw, ch) -
             sum(r.x, r.y + ch, cw, ch);
    }
  }
  return 0;
}

GrayImage toy_window(bool bright_top) {
  GrayImage w(kWindowSize, kWindowSize, 40);
  for (int y = 0; y < kWindowSize / 2; ++y) {
    for (int x = 0; x < kWindowSize; ++x) w.at(x, bright_top ? y : y + kWindowSize / 2) = 200;
  }
  return w;
}

std::vector<LabeledWindow> toy_samples() {
  std::vector<LabeledWindow> s;
  Rng rng(4);
  for (int i = 0; i < 6; ++i) {
    for (bool top : {true, false}) {
      GrayImage w = toy_window(top);
      for (auto& p : w.pixels()) p = static_cast<std::uint8_t>(p + rng.next() % 20);
      s.push_back({w, top});
    }
  }
  return s;
}

Cascade accept_all() {
  Cascade c;
  c.stages.push_back({{}, 0.0});
  return c;
}

}  // namespace

TEST_CASE("lbp_code examples") {
  CHECK(lbp_code(GrayImage(3, 3, 90), 1, 1) == 255);
  GrayImage hi(3, 3, 0);
  hi.at(1, 1) = 255;
  CHECK(lbp_code(hi, 1, 1) == 0);
  GrayImage lo(3, 3, 255);
  lo.at(1, 1) = 0;
  CHECK(lbp_code(lo, 1, 1) == 255);
  CHECK_THROWS_AS(lbp_code(GrayImage(3, 3, 0), 0, 1), BoundsError);
}

TEST_CASE("lbp_code bit order runs clockwise from the top-left") {
  const int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  const int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  for (int k = 0; k < 8; ++k) {
    GrayImage img(3, 3, 10);
    img.at(1, 1) = 100;
    img.at(1 + dx[k], 1 + dy[k]) = 200;
    CHECK(lbp_code(img, 1, 1) == (1 << k));
  }
}

TEST_CASE("lbp_histogram counts interior pixels") {
  const auto flat = lbp_histogram(GrayImage(10, 10, 50), {0, 0, 10, 10});
  CHECK(flat[255] == 64);
  CHECK(std::accumulate(flat.begin(), flat.end(), std::uint64_t{0}) == 64);

  Rng rng(6);
  const GrayImage img = random_image(rng, 30, 20);
  const auto a = lbp_histogram(img, {0, 0, 12, 20});
  const auto b = lbp_histogram(img, {12, 0, 18, 20});
  CHECK(std::accumulate(a.begin(), a.end(), std::uint64_t{0}) == 10u * 18u);
  // Disjoint regions add up to the histogram of their pixel union.
  std::array<std::uint64_t, 256> manual{};
  for (int y = 1; y < 19; ++y) {
    for (int x = 1; x < 29; ++x) {
      if (x == 11 || x == 12) continue;  // rims of the two regions
      ++manual[lbp_code(img, x, y)];
    }
  }
  for (int k = 0; k < 256; ++k) CHECK(a[k] + b[k] == manual[k]);
  CHECK_THROWS_AS(lbp_histogram(img, {0, 0, 2, 5}), SizeError);
}

TEST_CASE("haar_value on flat images is zero") {
  const IntegralImage ii(GrayImage(24, 24, 133));
  for (const auto& f : enumerate_features(4)) CHECK(haar_value(ii, f) == 0.0);
}

TEST_CASE("haar_value on a vertical step edge") {
  GrayImage img(24, 24, 10);
  for (int y = 0; y < 24; ++y) {
    for (int x = 12; x < 24; ++x) img.at(x, y) = 60;
  }
  const IntegralImage ii(img);
  const HaarFeature f{HaarKind::TwoRectHorizontal, {4, 2, 16, 10}};
  // Left half reads 10, right half 60, each 8x10 pixels.
  CHECK(haar_value(ii, f) == doctest::Approx(80.0 * (10 - 60)));
}

TEST_CASE("haar_value matches brute force and is linear") {
  Rng rng(12);
  const auto features = enumerate_features(2);
  for (int trial = 0; trial < 200; ++trial) {
    GrayImage img = random_image(rng, 40, 36);
    for (auto& p : img.pixels()) p /= 2;
    GrayImage twice = img;
    for (auto& p : twice.pixels()) p = static_cast<std::uint8_t>(2 * p);
    const IntegralImage ii(img);
    const IntegralImage ii2(twice);
    const auto& f = features[rng.next() % features.size()];
    const int ox = static_cast<int>(rng.next() % 16);
    const int oy = static_cast<int>(rng.next() % 12);
    const Point2D o{static_cast<double>(ox), static_cast<double>(oy)};
    REQUIRE(haar_value(ii, f, o) == static_cast<double>(brute_haar(img, f, ox, oy)));
    REQUIRE(haar_value(ii2, f, o) == 2.0 * haar_value(ii, f, o));
  }
}

TEST_CASE("features are well formed and parse back") {
  for (const auto& f : enumerate_features(4)) REQUIRE(f.well_formed());
  CHECK_FALSE((HaarFeature{HaarKind::ThreeRect, {0, 0, 4, 4}}.well_formed()));
  CHECK_FALSE((HaarFeature{HaarKind::TwoRectVertical, {0, 20, 4, 6}}.well_formed()));
  for (auto k : {HaarKind::TwoRectHorizontal, HaarKind::TwoRectVertical, HaarKind::ThreeRect,
                 HaarKind::FourRect}) {
    CHECK(parse_haar_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_haar_kind("five-rect"), FormatError);
}

TEST_CASE("adaboost separates a toy set in one round") {
  const auto samples = toy_samples();
  const auto res = adaboost_train(samples, enumerate_features(4), 1);
  REQUIRE(res.cascade.stages.size() == 1);
  REQUIRE(res.cascade.stages[0].weak.size() == 1);
  CHECK(res.round_errors[0] == 0.0);
  for (const auto& s : samples) {
    const IntegralImage ii(s.window);
    CHECK(cascade_classify(ii, {0, 0, 24, 24}, res.cascade) == s.positive);
  }
}

TEST_CASE("adaboost weights stay a distribution") {
  Rng rng(31);
  std::vector<LabeledWindow> samples;
  for (int i = 0; i < 24; ++i) samples.push_back({random_image(rng, 24, 24), i % 3 == 0});
  const auto res = adaboost_train(samples, enumerate_features(6), 8);
  for (const auto& w : res.round_weights) {
    double s = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  for (const auto& weak : res.cascade.stages[0].weak) CHECK(std::isfinite(weak.weight));
}

TEST_CASE("adaboost duplicate sample weighting follows the update rule") {
  // Sample 0 duplicated: its copies start with twice the total weight.
  GrayImage bright(24, 24, 200), dark(24, 24, 20), mid(24, 24, 120);
  const std::vector<HaarFeature> feats = {{HaarKind::TwoRectHorizontal, {0, 0, 24, 24}}};
  // Feature value is 0 everywhere, so every threshold errs on one class.
  const std::vector<LabeledWindow> samples = {{bright, true}, {bright, true}, {dark, false}, {mid, true}};
  const auto res = adaboost_train(samples, feats, 1);
  // Best stump votes positive for all: error = weight of the negative = 1/4.
  CHECK(res.round_errors[0] == doctest::Approx(0.25));
  const double alpha = 0.5 * std::log(3.0);
  CHECK(res.cascade.stages[0].weak[0].weight == doctest::Approx(alpha));
  // Reweight: correct ones scale by e^-alpha, the wrong one by e^alpha.
  const double c = 0.25 * std::exp(-alpha), w = 0.25 * std::exp(alpha);
  const double z = 3 * c + w;
  const auto& wt = res.round_weights[0];
  CHECK(wt[0] == doctest::Approx(c / z));
  CHECK(wt[1] == doctest::Approx(c / z));
  CHECK(wt[0] + wt[1] == doctest::Approx(2 * c / z));
  CHECK(wt[2] == doctest::Approx(w / z));
  CHECK(wt[2] == doctest::Approx(0.5));
}

TEST_CASE("adaboost preconditions") {
  const auto samples = toy_samples();
  CHECK_THROWS_AS(adaboost_train(samples, enumerate_features(4), 0), ParamError);
  std::vector<LabeledWindow> positives(samples.begin(), samples.begin() + 1);
  CHECK_THROWS_AS(adaboost_train(positives, enumerate_features(4), 1), ParamError);
  // Identical windows with opposite labels: no stump beats chance.
  const std::vector<LabeledWindow> clash = {{GrayImage(24, 24, 5), true}, {GrayImage(24, 24, 5), false}};
  CHECK_THROWS_AS(adaboost_train(clash, enumerate_features(8), 1), TrainingError);
}

TEST_CASE("cascade thresholds are monotone") {
  const auto res = adaboost_train(toy_samples(), enumerate_features(4), 3);
  CHECK(cascade_classify(IntegralImage(GrayImage(24, 24, 0)), {0, 0, 24, 24}, accept_all()));
  Rng rng(50);
  for (int i = 0; i < 30; ++i) {
    const GrayImage img = random_image(rng, 24, 24);
    const IntegralImage ii(img);
    Cascade c = res.cascade;
    bool prev = cascade_classify(ii, {0, 0, 24, 24}, c);
    const double start = c.stages[0].threshold;
    for (double t = start; t < start + 5.0; t += 0.25) {
      c.stages[0].threshold = t;
      const bool now = cascade_classify(ii, {0, 0, 24, 24}, c);
      CHECK(!(now && !prev));
      prev = now;
    }
  }
}

TEST_CASE("cascade text round trip") {
  const auto res = adaboost_train(toy_samples(), enumerate_features(4), 3);
  const std::string text = format_cascade(res.cascade);
  const Cascade back = parse_cascade(text);
  CHECK(format_cascade(back) == text);
  REQUIRE(back.stages.size() == res.cascade.stages.size());
  for (std::size_t i = 0; i < back.stages[0].weak.size(); ++i) {
    const auto& a = back.stages[0].weak[i];
    const auto& b = res.cascade.stages[0].weak[i];
    CHECK(a.threshold == b.threshold);
    CHECK(a.weight == b.weight);
    CHECK(a.polarity == b.polarity);
    CHECK(a.feature.rect == b.feature.rect);
  }
  CHECK_THROWS_AS(parse_cascade("weak four-rect 0 0 4 4 1 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_cascade("stage 0\nweak four-rect 0 0 4 4 3 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_cascade(""), ParseError);
}

TEST_CASE("detect_roi with accept-all cascades is deterministic") {
  const GrayImage img(80, 80, 100);
  const Rect r = detect_roi(img, accept_all(), accept_all());
  // Every window scores 0, so the top-left-most smallest window wins. Face
  // windows start at 48 px; the first pyramid size above it is 59.
  CHECK(r == Rect{0, 29, 24, 24});
  CHECK(detect_roi(img, accept_all(), accept_all()) == r);
}

TEST_CASE("detect_roi errors and annotation fallback") {
  CHECK_THROWS_AS(detect_roi(GrayImage(20, 30, 0), accept_all(), accept_all()), SizeError);
  Cascade reject;
  reject.stages.push_back({{}, 1.0});
  CHECK_THROWS_AS(detect_roi(GrayImage(40, 40, 0), reject, accept_all()), DetectionMiss);
  const GrayImage img(50, 40, 0);
  CHECK(resolve_roi(img, Rect{3, 4, 10, 8}, nullptr, nullptr) == Rect{3, 4, 10, 8});
  CHECK(resolve_roi(img, std::nullopt, nullptr, nullptr) == img.bounds());
  CHECK_THROWS_AS(resolve_roi(img, Rect{45, 0, 10, 8}, nullptr, nullptr), BoundsError);
}
