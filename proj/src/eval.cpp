#include "lipkey/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "lipkey/error.hpp"

namespace lipkey {

namespace {

constexpr std::string_view kManifestHeader = "path,label,x,y,w,h,category";
constexpr std::string_view kReportHeader = "metric,group,value";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line =
        trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    ++line_no;
    if (!line.empty()) fn(line_no, line);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
}

int parse_int_field(std::size_t line, std::string_view field, std::string_view name) {
  int v = 0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw ParseError(line, "bad " + std::string(name) + " '" + std::string(field) + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Calls fn(i) for i in [0, n) on at most `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

RoiSource roi_source(const EvalOptions& o, const std::optional<Rect>& annotation) {
  RoiSource s;
  s.annotation = annotation;
  s.face = o.face ? &*o.face : nullptr;
  s.mouth = o.mouth ? &*o.mouth : nullptr;
  return s;
}

// Loads the image and checks the annotation; empty reason on success.
std::string load_entry(const ManifestEntry& e, GrayImage& img) {
  try {
    img = read_pgm_file(e.image_path);
  } catch (const Error&) {
    return "unreadable-image";
  }
  if (e.roi && (e.roi->w < 1 || e.roi->h < 1 || !img.bounds().contains(*e.roi))) {
    return "roi-outside-image";
  }
  return {};
}

EntryOutcome run_entry(const ManifestEntry& e, Scenario scenario, const EvalOptions& o) {
  EntryOutcome out;
  out.image_path = e.image_path;
  out.truth = e.label;
  out.category = e.category;
  GrayImage img;
  out.reason = load_entry(e, img);
  if (!out.reason.empty()) {
    out.failed = true;
    return out;
  }
  const ScenarioResult r = run_scenario(img, scenario, o.settings, roi_source(o, e.roi));
  out.predicted = r.label;
  out.reason = r.reason;
  out.keypoints = r.diagnostics.used_points();
  out.seconds = r.diagnostics.seconds;
  return out;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> entries;
  bool header = false;
  for_each_line(text, [&](std::size_t line, std::string_view row) {
    if (!header) {
      if (row != kManifestHeader) {
        throw ParseError(line, "expected header '" + std::string(kManifestHeader) + "'");
      }
      header = true;
      return;
    }
    auto f = split(row, ',');
    if (f.size() < 2 || f.size() > 7) throw ParseError(line, "expected 2 to 7 fields");
    f.resize(7);
    ManifestEntry e;
    if (f[0].empty()) throw ParseError(line, "empty path");
    e.image_path = std::filesystem::path(std::string(f[0]));
    if (e.image_path.is_relative() && !base_dir.empty()) e.image_path = base_dir / e.image_path;
    bool known = false;
    for (auto l : kLabels) {
      if (f[1] == to_string(l)) {
        e.label = l;
        known = true;
      }
    }
    if (!known) throw ParseError(line, "unknown label '" + std::string(f[1]) + "'");
    const int set = static_cast<int>(std::count_if(f.begin() + 2, f.begin() + 6,
                                                   [](std::string_view s) { return !s.empty(); }));
    if (set == 4) {
      Rect r{parse_int_field(line, f[2], "x"), parse_int_field(line, f[3], "y"),
             parse_int_field(line, f[4], "w"), parse_int_field(line, f[5], "h")};
      if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1) throw ParseError(line, "invalid ROI");
      e.roi = r;
    } else if (set != 0) {
      throw ParseError(line, "ROI needs all of x,y,w,h or none");
    }
    if (!f[6].empty()) {
      if (std::find(kErrorCategories.begin(), kErrorCategories.end(), f[6]) == kErrorCategories.end()) {
        throw ParseError(line, "unknown category '" + std::string(f[6]) + "'");
      }
      e.category = std::string(f[6]);
    }
    entries.push_back(std::move(e));
  });
  if (!header) throw ParseError(1, "missing header");
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(slurp(path), path.parent_path());
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& e : entries) {
    out += e.image_path.generic_string() + "," + std::string(to_string(e.label)) + ",";
    if (e.roi) {
      out += std::to_string(e.roi->x) + "," + std::to_string(e.roi->y) + "," +
             std::to_string(e.roi->w) + "," + std::to_string(e.roi->h);
    } else {
      out += ",,,";
    }
    out += "," + e.category + "\n";
  }
  return out;
}

EvalOptions eval_options(const Config& c) {
  EvalOptions o;
  o.settings = pipeline_settings(c);
  o.workers = c.get_int("eval.workers");
  o.rotation_step = c.get_double("eval.rotation_step");
  o.rotation_max = c.get_double("eval.rotation_max");
  if (o.rotation_step <= 0.0) throw ParamError("eval.rotation_step must be positive");
  if (o.rotation_max < 0.0) throw ParamError("eval.rotation_max must be non-negative");
  const std::string& face = c.get("roi.face_cascade");
  const std::string& mouth = c.get("roi.mouth_cascade");
  if (!face.empty() && !mouth.empty()) {
    o.face = read_cascade_file(face);
    o.mouth = read_cascade_file(mouth);
  }
  return o;
}

EvalReport summarize(int scenario, const std::vector<EntryOutcome>& outcomes) {
  EvalReport rep;
  rep.scenario = scenario;
  rep.total = outcomes.size();
  for (auto l : kLabels) rep.labels.push_back({l});
  auto metrics = [&](Expression l) -> LabelMetrics& {
    return rep.labels[static_cast<std::size_t>(l)];
  };
  double seconds = 0.0;
  std::size_t timed = 0;
  bool any_points = false;
  for (const auto& o : outcomes) {
    const bool ok = !o.failed && o.predicted == o.truth;
    if (ok) {
      ++rep.correct;
      ++metrics(o.truth).tp;
    } else {
      ++metrics(o.truth).fn;
      if (!o.failed && o.predicted != Expression::Unrecognized) ++metrics(o.predicted).fp;
    }
    if (o.failed) {
      ++rep.failed;
      continue;
    }
    seconds += o.seconds;
    ++timed;
    rep.keypoints_min = any_points ? std::min(rep.keypoints_min, o.keypoints) : o.keypoints;
    rep.keypoints_max = any_points ? std::max(rep.keypoints_max, o.keypoints) : o.keypoints;
    any_points = true;
  }
  for (auto& m : rep.labels) {
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
  }
  rep.accuracy = ratio(rep.correct, rep.total);
  rep.mean_seconds = timed == 0 ? 0.0 : seconds / static_cast<double>(timed);
  for (auto tag : kErrorCategories) {
    CategoryRate c;
    c.category = std::string(tag);
    for (const auto& o : outcomes) {
      if (o.category != tag) continue;
      ++c.count;
      if (o.failed || o.predicted != o.truth) ++c.errors;
    }
    if (c.count == 0) continue;
    c.within = ratio(c.errors, c.count);
    c.overall = ratio(c.errors, rep.total);
    rep.categories.push_back(std::move(c));
  }
  return rep;
}

EvalReport evaluate(const std::vector<ManifestEntry>& manifest, Scenario scenario,
                    const EvalOptions& options) {
  // Warm-up pass on the first readable image; its result is discarded.
  for (const auto& e : manifest) {
    GrayImage img;
    if (!load_entry(e, img).empty()) continue;
    (void)run_scenario(img, scenario, options.settings, roi_source(options, e.roi));
    break;
  }
  std::vector<EntryOutcome> outcomes(manifest.size());
  parallel_for(manifest.size(), options.workers, [&](std::size_t i) {
    outcomes[i] = run_entry(manifest[i], scenario, options);
  });
  EvalReport rep = summarize(static_cast<int>(scenario), outcomes);
  rep.outcomes = std::move(outcomes);
  return rep;
}

Rect rotate_rect(const Rect& r, int width, int height, double degrees) {
  const double t = degrees * 3.14159265358979323846 / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  // Pixel edges in pixel-center coordinates, so mirrored rectangles round the same way.
  const double xs[2] = {r.x - 0.5, r.right() - 0.5};
  const double ys[2] = {r.y - 0.5, r.bottom() - 0.5};
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (double px : xs) {
    for (double py : ys) {
      const double dx = px - cx;
      const double dy = py - cy;
      const double X = c * dx + s * dy + cx;
      const double Y = -s * dx + c * dy + cy;
      x0 = std::min(x0, X);
      x1 = std::max(x1, X);
      y0 = std::min(y0, Y);
      y1 = std::max(y1, Y);
    }
  }
  // Snap away from the center by a tolerance so exact edges stay put.
  constexpr double kEps = 1e-9;
  Rect o;
  o.x = std::clamp(static_cast<int>(std::floor(x0 + 0.5 + kEps)), 0, width - 1);
  o.y = std::clamp(static_cast<int>(std::floor(y0 + 0.5 + kEps)), 0, height - 1);
  const int right = std::clamp(static_cast<int>(std::ceil(x1 + 0.5 - kEps)), o.x + 1, width);
  const int bottom = std::clamp(static_cast<int>(std::ceil(y1 + 0.5 - kEps)), o.y + 1, height);
  o.w = right - o.x;
  o.h = bottom - o.y;
  return o;
}

RotationSweep rotation_sweep(const std::vector<ManifestEntry>& manifest, Scenario scenario,
                             const EvalOptions& options) {
  RotationSweep sweep;
  sweep.images.resize(manifest.size());
  const int steps = static_cast<int>(std::floor(options.rotation_max / options.rotation_step + 1e-9));
  parallel_for(manifest.size(), options.workers, [&](std::size_t i) {
    const ManifestEntry& e = manifest[i];
    RotationTolerance& t = sweep.images[i];
    t.image_path = e.image_path;
    GrayImage img;
    if (!load_entry(e, img).empty()) {
      t.skipped = true;
      return;
    }
    t.baseline = run_scenario(img, scenario, options.settings, roi_source(options, e.roi)).label;
    if (t.baseline != e.label) {
      t.skipped = true;
      return;
    }
    for (int sign : {1, -1}) {
      double last = 0.0;
      for (int k = 1; k <= steps; ++k) {
        const double deg = sign * k * options.rotation_step;
        std::optional<Rect> roi;
        if (e.roi) roi = rotate_rect(*e.roi, img.width(), img.height(), deg);
        const auto r = run_scenario(rotate(img, deg), scenario, options.settings, roi_source(options, roi));
        if (r.label != t.baseline) break;
        last = k * options.rotation_step;
      }
      (sign > 0 ? t.positive : t.negative) = last;
    }
  });
  auto& s = sweep.summary;
  double sum = 0.0;
  for (const auto& t : sweep.images) {
    if (t.skipped) {
      ++s.skipped;
      continue;
    }
    const double lo = std::min(t.positive, t.negative);
    const double hi = std::max(t.positive, t.negative);
    s.min = s.images == 0 ? lo : std::min(s.min, lo);
    s.max = s.images == 0 ? hi : std::max(s.max, hi);
    sum += t.positive + t.negative;
    ++s.images;
  }
  s.mean = s.images == 0 ? 0.0 : sum / (2.0 * static_cast<double>(s.images));
  return sweep;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw ParamError("unknown report format '" + std::string(s) + "'");
}

namespace {

struct Row {
  std::string metric;
  std::string group;
  double value;
};

std::vector<Row> report_rows(const EvalReport& r) {
  std::vector<Row> rows;
  const auto n = [](std::size_t v) { return static_cast<double>(v); };
  if (r.total > 0 || r.scenario != 0) {
    rows.push_back({"scenario", "all", static_cast<double>(r.scenario)});
    rows.push_back({"images", "all", n(r.total)});
    rows.push_back({"correct", "all", n(r.correct)});
    rows.push_back({"failed", "all", n(r.failed)});
    rows.push_back({"accuracy", "all", r.accuracy});
    rows.push_back({"keypoints_min", "all", n(r.keypoints_min)});
    rows.push_back({"keypoints_max", "all", n(r.keypoints_max)});
    rows.push_back({"mean_seconds", "all", r.mean_seconds});
  }
  for (const auto& m : r.labels) {
    const std::string g(to_string(m.label));
    rows.push_back({"precision", g, m.precision});
    rows.push_back({"recall", g, m.recall});
    rows.push_back({"tp", g, n(m.tp)});
    rows.push_back({"fp", g, n(m.fp)});
    rows.push_back({"fn", g, n(m.fn)});
  }
  for (const auto& c : r.categories) {
    rows.push_back({"category_images", c.category, n(c.count)});
    rows.push_back({"category_errors", c.category, n(c.errors)});
    rows.push_back({"error_rate_within", c.category, c.within});
    rows.push_back({"error_rate_overall", c.category, c.overall});
  }
  if (r.rotation) {
    rows.push_back({"rotation_images", "all", n(r.rotation->images)});
    rows.push_back({"rotation_skipped", "all", n(r.rotation->skipped)});
    rows.push_back({"rotation_min", "all", r.rotation->min});
    rows.push_back({"rotation_mean", "all", r.rotation->mean});
    rows.push_back({"rotation_max", "all", r.rotation->max});
  }
  return rows;
}

std::string emit_markdown(const EvalReport& r) {
  std::string out = "| group | precision | recall | value |\n|---|---|---|---|\n";
  for (const auto& m : r.labels) {
    out += "| " + std::string(to_string(m.label)) + " | " + fmt(m.precision) + " | " + fmt(m.recall) +
           " |  |\n";
  }
  auto summary = [&](const std::string& name, double v) {
    out += "| " + name + " |  |  | " + fmt(v) + " |\n";
  };
  summary("accuracy", r.accuracy);
  summary("images", static_cast<double>(r.total));
  summary("keypoints min", static_cast<double>(r.keypoints_min));
  summary("keypoints max", static_cast<double>(r.keypoints_max));
  summary("seconds per image", r.mean_seconds);
  for (const auto& c : r.categories) {
    summary("error rate " + c.category + " (within tag)", c.within);
    summary("error rate " + c.category + " (all images)", c.overall);
  }
  if (r.rotation) {
    summary("rotation min", r.rotation->min);
    summary("rotation mean", r.rotation->mean);
    summary("rotation max", r.rotation->max);
  }
  return out;
}

}  // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::Markdown) return emit_markdown(report);
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& row : report_rows(report)) {
    out += row.metric + "," + row.group + "," + fmt(row.value) + "\n";
  }
  return out;
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport r;
  bool header = false;
  auto count = [](double v) { return static_cast<std::size_t>(std::llround(v)); };
  for_each_line(text, [&](std::size_t line, std::string_view row) {
    if (!header) {
      if (row != kReportHeader) throw ParseError(line, "expected header '" + std::string(kReportHeader) + "'");
      header = true;
      return;
    }
    const auto f = split(row, ',');
    if (f.size() != 3) throw ParseError(line, "expected metric,group,value");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(std::string(f[2]), &used);
      if (used != f[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line, "bad value '" + std::string(f[2]) + "'");
    }
    const std::string_view m = f[0];
    const std::string g(f[1]);
    if (g == "all") {
      auto rot = [&]() -> RotationSummary& {
        if (!r.rotation) r.rotation.emplace();
        return *r.rotation;
      };
      if (m == "scenario") r.scenario = static_cast<int>(std::lround(v));
      else if (m == "images") r.total = count(v);
      else if (m == "correct") r.correct = count(v);
      else if (m == "failed") r.failed = count(v);
      else if (m == "accuracy") r.accuracy = v;
      else if (m == "keypoints_min") r.keypoints_min = count(v);
      else if (m == "keypoints_max") r.keypoints_max = count(v);
      else if (m == "mean_seconds") r.mean_seconds = v;
      else if (m == "rotation_images") rot().images = count(v);
      else if (m == "rotation_skipped") rot().skipped = count(v);
      else if (m == "rotation_min") rot().min = v;
      else if (m == "rotation_mean") rot().mean = v;
      else if (m == "rotation_max") rot().max = v;
      else throw ParseError(line, "unknown metric '" + std::string(m) + "'");
      return;
    }
    if (m == "precision" || m == "recall" || m == "tp" || m == "fp" || m == "fn") {
      Expression label;
      try {
        label = parse_expression(g);
      } catch (const Error&) {
        throw ParseError(line, "unknown label '" + g + "'");
      }
      auto it = std::find_if(r.labels.begin(), r.labels.end(),
                             [&](const LabelMetrics& x) { return x.label == label; });
      if (it == r.labels.end()) it = r.labels.insert(r.labels.end(), LabelMetrics{label});
      if (m == "precision") it->precision = v;
      else if (m == "recall") it->recall = v;
      else if (m == "tp") it->tp = count(v);
      else if (m == "fp") it->fp = count(v);
      else it->fn = count(v);
      return;
    }
    if (m.starts_with("category_") || m.starts_with("error_rate_")) {
      auto it = std::find_if(r.categories.begin(), r.categories.end(),
                             [&](const CategoryRate& x) { return x.category == g; });
      if (it == r.categories.end()) it = r.categories.insert(r.categories.end(), CategoryRate{g});
      if (m == "category_images") it->count = count(v);
      else if (m == "category_errors") it->errors = count(v);
      else if (m == "error_rate_within") it->within = v;
      else if (m == "error_rate_overall") it->overall = v;
      else throw ParseError(line, "unknown metric '" + std::string(m) + "'");
      return;
    }
    throw ParseError(line, "unknown metric '" + std::string(m) + "'");
  });
  if (!header) throw ParseError(1, "missing header");
  return r;
}

}  // namespace lipkey
