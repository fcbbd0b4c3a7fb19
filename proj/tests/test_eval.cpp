#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "lipkey/error.hpp"
#include "lipkey/eval.hpp"
#include "lipkey/synth.hpp"

using namespace lipkey;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lipkey_eval_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

EvalOptions synthetic_options(int workers = 2) {
  Config c;
  c.load_file(fs::path(LIPKEY_SOURCE_DIR) / "config" / "synthetic.conf");
  c.set("eval.workers", std::to_string(workers));
  return eval_options(c);
}

EntryOutcome outcome(Expression truth, Expression pred, const std::string& cat = "none") {
  EntryOutcome o;
  o.truth = truth;
  o.predicted = pred;
  o.category = cat;
  return o;
}

const LabelMetrics& metrics(const EvalReport& r, Expression l) {
  for (const auto& m : r.labels) {
    if (m.label == l) return m;
  }
  throw std::runtime_error("label missing");
}

}  // namespace

TEST_CASE("parse_manifest reads rows") {
  const auto e = parse_manifest(
      "path,label,x,y,w,h,category\n"
      "a.pgm,neutral,1,2,30,20,none\n"
      "b.pgm,smile,,,,,mustache\n"
      "/abs/c.pgm,laugh\n",
      "/data");
  REQUIRE(e.size() == 3);
  CHECK(e[0].image_path == fs::path("/data/a.pgm"));
  CHECK(e[0].roi == Rect{1, 2, 30, 20});
  CHECK(e[0].label == Expression::Neutral);
  CHECK_FALSE(e[1].roi.has_value());
  CHECK(e[1].category == "mustache");
  CHECK(e[2].image_path == fs::path("/abs/c.pgm"));
  CHECK(e[2].category == "none");
  CHECK(parse_manifest(format_manifest(e)).size() == 3);
}

TEST_CASE("parse_manifest errors carry the line number") {
  const std::string header = "path,label,x,y,w,h,category\n";
  try {
    parse_manifest(header + "a.pgm,smile,,,,,\nb.pgm,happy,,,,,\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_manifest(header + "a.pgm,smile,1,2,,,\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest(header + "a.pgm,smile,1,2,0,4,\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest(header + "a.pgm,smile,,,,,beard\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest(header + "a.pgm,unrecognized\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest(header + "a.pgm,smile,1,2,3,4,none,extra\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest("file,label\na.pgm,smile\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest(""), ParseError);
}

TEST_CASE("summarize: all correct") {
  std::vector<EntryOutcome> o;
  for (auto l : kLabels) {
    for (int i = 0; i < 3; ++i) o.push_back(outcome(l, l));
  }
  const EvalReport r = summarize(3, o);
  CHECK(r.accuracy == 1.0);
  for (const auto& m : r.labels) {
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
  }
}

TEST_CASE("summarize: all unrecognized") {
  std::vector<EntryOutcome> o;
  for (auto l : kLabels) o.push_back(outcome(l, Expression::Unrecognized));
  const EvalReport r = summarize(1, o);
  CHECK(r.accuracy == 0.0);
  for (const auto& m : r.labels) {
    CHECK(m.recall == 0.0);
    CHECK(m.precision == 0.0);
    CHECK(m.fp == 0);
  }
}

TEST_CASE("summarize: hand-built four-image case") {
  const std::vector<EntryOutcome> o = {
      outcome(Expression::Smile, Expression::Smile, "mustache"),
      outcome(Expression::Smile, Expression::Laugh, "mustache"),
      outcome(Expression::Laugh, Expression::Laugh),
      outcome(Expression::Neutral, Expression::Unrecognized, "wrinkles"),
  };
  const EvalReport r = summarize(3, o);
  CHECK(r.accuracy == 0.5);
  CHECK(metrics(r, Expression::Smile).precision == 1.0);
  CHECK(metrics(r, Expression::Smile).recall == 0.5);
  CHECK(metrics(r, Expression::Laugh).precision == 0.5);
  CHECK(metrics(r, Expression::Laugh).recall == 1.0);
  CHECK(metrics(r, Expression::Neutral).precision == 0.0);
  CHECK(metrics(r, Expression::Neutral).recall == 0.0);
  REQUIRE(r.categories.size() == 3);
  CHECK(r.categories[0].category == "mustache");
  CHECK(r.categories[0].within == 0.5);
  CHECK(r.categories[0].overall == 0.25);
  CHECK(r.categories[1].category == "wrinkles");
  CHECK(r.categories[1].within == 1.0);
  CHECK(r.categories[2].category == "none");
  CHECK(r.categories[2].within == 0.0);
}

TEST_CASE("summarize matches a brute-force confusion matrix") {
  Rng rng(404);
  const Expression preds[] = {Expression::Neutral, Expression::Smile, Expression::Laugh, Expression::Unrecognized};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EntryOutcome> o;
    const int n = static_cast<int>(rng.next() % 40);
    for (int i = 0; i < n; ++i) {
      auto e = outcome(kLabels[rng.next() % 3], preds[rng.next() % 4]);
      e.failed = rng.next() % 10 == 0;
      e.keypoints = rng.next() % 100;
      e.seconds = rng.uniform();
      o.push_back(e);
    }
    std::map<std::pair<int, int>, int> cm;
    for (const auto& e : o) ++cm[{static_cast<int>(e.truth), e.failed ? 3 : static_cast<int>(e.predicted)}];
    const EvalReport r = summarize(2, o);
    int correct = 0;
    for (int l = 0; l < 3; ++l) {
      int tp = cm[{l, l}], fp = 0, fn = 0;
      for (int k = 0; k < 4; ++k) {
        if (k != l) fn += cm[{l, k}];
      }
      for (int t = 0; t < 3; ++t) {
        if (t != l) fp += cm[{t, l}];
      }
      correct += tp;
      const auto& m = r.labels[l];
      REQUIRE(m.tp == static_cast<std::size_t>(tp));
      REQUIRE(m.fp == static_cast<std::size_t>(fp));
      REQUIRE(m.fn == static_cast<std::size_t>(fn));
      REQUIRE(m.precision == (tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp)));
      REQUIRE(m.recall == (tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn)));
      CHECK(m.precision >= 0.0);
      CHECK(m.precision <= 1.0);
    }
    REQUIRE(r.accuracy == (n == 0 ? 0.0 : static_cast<double>(correct) / n));
    CHECK(r.keypoints_min <= r.keypoints_max);
  }
}

TEST_CASE("evaluate runs a synthetic manifest deterministically") {
  const fs::path dir = scratch("det");
  write_corpus(dir, synth_corpus(9, 5));
  auto entries = load_manifest(dir / "manifest.csv");
  REQUIRE(entries.size() == 9);
  CHECK(entries[0].image_path.parent_path() == dir);
  const EvalOptions opt = synthetic_options();
  const EvalReport a = evaluate(entries, Scenario::HarrisBrisk, opt);
  const EvalReport b = evaluate(entries, Scenario::HarrisBrisk, synthetic_options(1));
  CHECK(a.total == 9);
  CHECK(a.accuracy >= 0.8);
  CHECK(a.mean_seconds > 0.0);
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    CHECK(a.outcomes[i].predicted == b.outcomes[i].predicted);
    CHECK(a.outcomes[i].keypoints == b.outcomes[i].keypoints);
  }
  EvalReport a0 = a, b0 = b;
  a0.mean_seconds = b0.mean_seconds = 0.0;
  CHECK(emit_report(a0, ReportFormat::Csv) == emit_report(b0, ReportFormat::Csv));
}

TEST_CASE("evaluate counts unreadable images as misses") {
  const fs::path dir = scratch("bad");
  write_corpus(dir, synth_corpus(3, 5));
  auto entries = load_manifest(dir / "manifest.csv");
  entries.push_back({dir / "missing.pgm", Expression::Smile, std::nullopt, "none"});
  entries.push_back({entries[0].image_path, Expression::Neutral, Rect{140, 0, 20, 20}, "none"});
  const EvalReport r = evaluate(entries, Scenario::Harris, synthetic_options());
  CHECK(r.failed == 2);
  CHECK(r.outcomes[3].failed);
  CHECK(r.outcomes[3].reason == "unreadable-image");
  CHECK(r.outcomes[4].reason == "roi-outside-image");
  CHECK(metrics(r, Expression::Smile).fn >= 1);
}

TEST_CASE("rotate_rect") {
  const Rect r{30, 20, 40, 16};
  CHECK(rotate_rect(r, 100, 80, 0.0) == r);
  // 90 degrees on a square frame swaps the extents about the center.
  const Rect q = rotate_rect(Rect{10, 30, 20, 10}, 100, 100, 90.0);
  CHECK(q == Rect{30, 70, 10, 20});
  // Mirror-symmetric input stays symmetric under opposite angles.
  const Rect s{24, 25, 96, 46};
  for (double deg : {3.0, 17.0, 40.0}) {
    const Rect a = rotate_rect(s, 144, 96, deg);
    const Rect b = rotate_rect(s, 144, 96, -deg);
    CHECK(a.x == b.x);
    CHECK(a.w == b.w);
    CHECK(a.x == 144 - a.right());
    CHECK(a.contains(Rect{a.x, a.y, 1, 1}));
    CHECK(Rect{0, 0, 144, 96}.contains(a));
  }
}

TEST_CASE("rotation_sweep skips wrong baselines and stays bounded") {
  const fs::path dir = scratch("rot");
  SynthOptions so;
  so.symmetric = true;
  write_corpus(dir, synth_corpus(3, 2, so));
  auto entries = load_manifest(dir / "manifest.csv");
  entries[0].label = Expression::Laugh;  // deliberately wrong ground truth
  EvalOptions opt = synthetic_options();
  opt.rotation_max = 6.0;
  opt.rotation_step = 2.0;
  const RotationSweep s = rotation_sweep(entries, Scenario::HarrisBrisk, opt);
  REQUIRE(s.images.size() == 3);
  CHECK(s.images[0].skipped);
  CHECK(s.summary.skipped >= 1);
  for (const auto& t : s.images) {
    if (t.skipped) continue;
    CHECK(t.positive <= 6.0);
    CHECK(t.negative <= 6.0);
    CHECK(std::fmod(t.positive, 2.0) == 0.0);
  }
  CHECK(s.summary.min <= s.summary.mean);
  CHECK(s.summary.mean <= s.summary.max);
}

TEST_CASE("mirror-symmetric inputs tolerate rotation symmetrically") {
  const fs::path dir = scratch("sym");
  SynthOptions so;
  so.symmetric = true;
  const auto corpus = synth_corpus(12, 7, so);
  write_corpus(dir, corpus);
  // Turning by -deg is the mirror image of turning by +deg, pixel for pixel.
  for (const auto& c : corpus) {
    const int w = c.image.width(), h = c.image.height();
    for (double deg : {7.0, 23.0, 40.0}) {
      const GrayImage pos = rotate(c.image, deg), neg = rotate(c.image, -deg);
      bool mirrored = true;
      for (int y = 0; y < h && mirrored; ++y) {
        for (int x = 0; x < w; ++x) mirrored = mirrored && pos.at(x, y) == neg.at(w - 1 - x, y);
      }
      CHECK(mirrored);
      const Rect a = rotate_rect(c.roi, w, h, deg), b = rotate_rect(c.roi, w, h, -deg);
      CHECK(a.x == w - b.right());
      CHECK(a.y == b.y);
      CHECK(a.w == b.w);
      CHECK(a.h == b.h);
    }
  }
  const auto entries = load_manifest(dir / "manifest.csv");
  EvalOptions opt = synthetic_options();
  opt.rotation_max = 40.0;
  const RotationSweep s = rotation_sweep(entries, Scenario::Harris, opt);
  int swept = 0, symmetric = 0;
  for (const auto& t : s.images) {
    if (t.skipped) continue;
    ++swept;
    symmetric += std::abs(t.positive - t.negative) <= opt.rotation_step;
  }
  CHECK(swept >= 4);
  // Keypoint tie-breaks are not mirror-exact, so a few sweeps may differ.
  CHECK(4 * symmetric >= 3 * swept);
}

TEST_CASE("emit_report: empty report is a bare header") {
  CHECK(emit_report(EvalReport{}, ReportFormat::Csv) == "metric,group,value\n");
}

TEST_CASE("emit_report: CSV round trip is a fixed point") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EntryOutcome> o;
    const char* cats[] = {"none", "mustache", "low_quality"};
    for (int i = 0; i < 25; ++i) {
      auto e = outcome(kLabels[rng.next() % 3], kLabels[rng.next() % 3], cats[rng.next() % 3]);
      e.seconds = rng.uniform(0.001, 0.9);
      e.keypoints = rng.next() % 80;
      o.push_back(e);
    }
    EvalReport r = summarize(2, o);
    if (trial % 2) r.rotation = RotationSummary{20, 5, 1.0, rng.uniform(0, 40), 44.0};
    const std::string a = emit_report(r, ReportFormat::Csv);
    const EvalReport back = parse_report_csv(a);
    CHECK(emit_report(back, ReportFormat::Csv) == a);
    CHECK(std::abs(back.accuracy - r.accuracy) <= 1e-6 * std::max(1.0, r.accuracy));
    CHECK(std::abs(back.mean_seconds - r.mean_seconds) <= 1e-5 * r.mean_seconds);
  }
  CHECK_THROWS_AS(parse_report_csv("metric,group,value\naccuracy,all,abc\n"), ParseError);
  CHECK_THROWS_AS(parse_report_csv("metric,group,value\nbogus,all,1\n"), ParseError);
}

TEST_CASE("emit_report: markdown rows are labels plus summary rows") {
  std::vector<EntryOutcome> o = {outcome(Expression::Smile, Expression::Smile, "mustache"),
                                 outcome(Expression::Laugh, Expression::Smile)};
  EvalReport r = summarize(3, o);
  auto count_rows = [](const std::string& md) {
    int rows = 0;
    std::size_t pos = 0;
    while ((pos = md.find('\n', pos)) != std::string::npos) {
      ++rows;
      ++pos;
    }
    return rows - 2;  // header and separator
  };
  // accuracy, images, keypoints min/max, seconds, two per category.
  const int summary = 5 + 2 * static_cast<int>(r.categories.size());
  CHECK(count_rows(emit_report(r, ReportFormat::Markdown)) == static_cast<int>(r.labels.size()) + summary);
  r.rotation = RotationSummary{};
  CHECK(count_rows(emit_report(r, ReportFormat::Markdown)) == static_cast<int>(r.labels.size()) + summary + 3);
  CHECK(parse_report_format("markdown") == ReportFormat::Markdown);
  CHECK_THROWS_AS(parse_report_format("xml"), ParamError);
}
