#include "lipkey/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "lipkey/config.hpp"
#include "lipkey/error.hpp"
#include "lipkey/eval.hpp"
#include "lipkey/pipeline.hpp"
#include "lipkey/preprocess.hpp"
#include "lipkey/roi.hpp"
#include "lipkey/synth.hpp"

namespace lipkey {

namespace {

// Bad user input detected after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<Rect> parse_roi(const std::string& s) {
  if (s.empty()) return std::nullopt;
  Rect r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(s);
  if (!(in >> r.x >> c1 >> r.y >> c2 >> r.w >> c3 >> r.h) || c1 != ',' || c2 != ',' || c3 != ',' ||
      !in.eof() || r.w < 1 || r.h < 1) {
    throw UsageError("--roi expects x,y,w,h");
  }
  return r;
}

struct Cascades {
  std::optional<Cascade> face;
  std::optional<Cascade> mouth;

  RoiSource source(const std::optional<Rect>& annotation) const {
    RoiSource s;
    s.annotation = annotation;
    s.face = face ? &*face : nullptr;
    s.mouth = mouth ? &*mouth : nullptr;
    return s;
  }
};

Cascades load_cascades(const Config& c) {
  Cascades out;
  const std::string& face = c.get("roi.face_cascade");
  const std::string& mouth = c.get("roi.mouth_cascade");
  if (!face.empty() && !mouth.empty()) {
    out.face = read_cascade_file(face);
    out.mouth = read_cascade_file(mouth);
  }
  return out;
}

std::vector<KeyPoint> to_image(std::vector<KeyPoint> kps, const Rect& roi) {
  for (auto& k : kps) {
    k.location.x += roi.x;
    k.location.y += roi.y;
  }
  return kps;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw FormatError("cannot write " + path);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free smile and laugh recognition from mouth keypoints", "lipkey"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> assignments;
  app.add_option("--config", config_file, "config file (default: $LIPKEY_CONFIG)");
  app.add_option("--set", assignments, "override a config key, key=value (repeatable)")
      ->allow_extra_args(false);

  std::string input, output_path, roi_text, manifest;
  int scenario = 3;
  int count = 0;
  std::uint64_t seed = 0;
  std::string format = "csv";
  bool symmetric = false;
  bool rotation = false;

  auto* pre = app.add_subcommand("preprocess", "tone-map an image");
  pre->add_option("input", input, "input PGM")->required();
  pre->add_option("output", output_path, "output PGM")->required();

  auto* det = app.add_subcommand("detect-roi", "print the mouth rectangle as x,y,w,h");
  det->add_option("input", input, "input PGM")->required();

  auto* kps = app.add_subcommand("keypoints", "print the scenario's keypoints as CSV");
  kps->add_option("--scenario", scenario, "1, 2 or 3")->check(CLI::Range(1, 3));
  kps->add_option("--roi", roi_text, "mouth rectangle x,y,w,h");
  kps->add_option("input", input, "input PGM")->required();

  auto* rec = app.add_subcommand("recognize", "print the label and a diagnostics record");
  rec->add_option("--scenario", scenario, "1, 2 or 3")->check(CLI::Range(1, 3));
  rec->add_option("--roi", roi_text, "mouth rectangle x,y,w,h");
  rec->add_option("input", input, "input PGM")->required();

  auto* ev = app.add_subcommand("evaluate", "evaluate a manifest and print the report");
  ev->add_option("--manifest", manifest, "manifest CSV")->required();
  ev->add_option("--scenario", scenario, "1, 2 or 3")->check(CLI::Range(1, 3));
  ev->add_option("--out", output_path, "write the report here instead of stdout");
  ev->add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown", "md"}));
  ev->add_flag("--rotation", rotation, "also run the rotation sweep");

  auto* syn = app.add_subcommand("synth", "render the synthetic mouth corpus and its manifest");
  syn->add_option("--n", count, "number of images")->required()->check(CLI::PositiveNumber);
  syn->add_option("--seed", seed, "generator seed")->required();
  syn->add_option("--out", output_path, "output directory")->required();
  syn->add_flag("--symmetric", symmetric, "mirror-symmetric mouths");

  for (auto* sub : {pre, det, kps, rec, ev, syn}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Config config;
  try {
    if (config_file.empty()) {
      if (const char* env = std::getenv("LIPKEY_CONFIG"); env && *env) config_file = env;
    }
    if (!config_file.empty()) config.load_file(config_file);
    for (const auto& a : assignments) config.set_assignment(a);
    (void)pipeline_settings(config);
  } catch (const std::exception& e) {
    err << "lipkey: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const PipelineSettings settings = pipeline_settings(config);
    if (*pre) {
      const GrayImage img = read_pgm_file(input);
      write_pgm_file(output_path, settings.enhance_enabled ? enhance(img, settings.enhance) : img);
    } else if (*det) {
      const GrayImage img = read_pgm_file(input);
      const Cascades cas = load_cascades(config);
      const GrayImage enhanced = settings.enhance_enabled ? enhance(img, settings.enhance) : img;
      const Rect r = resolve_roi(enhanced, std::nullopt, cas.face ? &*cas.face : nullptr,
                                 cas.mouth ? &*cas.mouth : nullptr);
      out << r.x << "," << r.y << "," << r.w << "," << r.h << "\n";
    } else if (*kps) {
      const auto roi = parse_roi(roi_text);
      const GrayImage img = read_pgm_file(input);
      const Cascades cas = load_cascades(config);
      const Scenario sc = parse_scenario(scenario);
      const auto k = extract_keypoints(img, sc, settings, cas.source(roi));
      std::vector<KeyPoint> pts;
      if (sc == Scenario::Harris) {
        pts = k.harris;
      } else if (sc == Scenario::HarrisPca) {
        for (const auto& p : k.reduced) pts.push_back({p});
      } else {
        pts = k.brisk;
      }
      out << keypoints_to_csv(to_image(std::move(pts), k.roi));
    } else if (*rec) {
      const auto roi = parse_roi(roi_text);
      const GrayImage img = read_pgm_file(input);
      const Cascades cas = load_cascades(config);
      const ScenarioResult r = run_scenario(img, parse_scenario(scenario), settings, cas.source(roi));
      out << to_string(r.label) << "\n" << diagnostics_record(r) << "\n";
    } else if (*ev) {
      const auto entries = load_manifest(manifest);
      const EvalOptions opts = eval_options(config);
      const Scenario sc = parse_scenario(scenario);
      EvalReport rep = evaluate(entries, sc, opts);
      if (rotation) rep.rotation = rotation_sweep(entries, sc, opts).summary;
      write_text(output_path, emit_report(rep, parse_report_format(format)), out);
    } else if (*syn) {
      SynthOptions opt;
      opt.symmetric = symmetric;
      write_corpus(output_path, synth_corpus(count, seed, opt));
    }
  } catch (const UsageError& e) {
    err << "lipkey: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lipkey: " << e.what() << "\n";
    return kExitProcessing;
  }
  return kExitOk;
}

}  // namespace lipkey
