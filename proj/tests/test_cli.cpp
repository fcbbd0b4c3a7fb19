#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lipkey/cli.hpp"
#include "lipkey/config.hpp"
#include "lipkey/error.hpp"
#include "lipkey/eval.hpp"

using namespace lipkey;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lipkey");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lipkey_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kSynthConf = std::string(LIPKEY_SOURCE_DIR) + "/config/synthetic.conf";

}  // namespace

TEST_CASE("config rejects unknown keys and bad values") {
  Config c;
  CHECK_THROWS_AS(c.set("harris.nope", "1"), ParamError);
  CHECK_THROWS_AS(c.set("harris.k", "abc"), ParamError);
  CHECK_THROWS_AS(c.set("eval.workers", "1.5"), ParamError);
  CHECK_THROWS_AS(c.set("enhance.enabled", "yes"), ParamError);
  CHECK_THROWS_AS(c.set_assignment("harris.k"), ParamError);
  CHECK_THROWS_AS(c.load_text("harris.k = 0.05\nbogus = 1\n"), ParseError);
}

TEST_CASE("config defaults") {
  const Config c;
  CHECK(c.get("harris.sigma") == "1.5");
  CHECK(c.get("harris.k") == "0.04");
  CHECK(c.get("harris.threshold") == "50000");
  CHECK(c.get("brisk.threshold") == "0.01");
  CHECK(c.get("brisk.octaves") == "4");
  CHECK(c.get("enhance.alpha") == "0.125");
  CHECK(c.get("enhance.beta") == "0.25");
  CHECK(c.get("enhance.rho") == "0.1");
  CHECK(c.get("enhance.gamma") == "0.5");
  CHECK(c.get("recognize.d1") == "2500");
  CHECK(c.get("recognize.d4_high") == "7000");
  for (const auto& k : config_keys()) CHECK(c.get(k.name) == k.default_value);
}

TEST_CASE("every key is settable by assignment and by file, flag wins") {
  for (const auto& k : config_keys()) {
    Config by_set, by_file, both;
    by_set.set_assignment(k.name + "=" + k.default_value);
    by_file.load_text("# comment\n" + k.name + " = " + k.default_value + "  # trailing\n");
    CHECK(by_set.values() == by_file.values());
  }
  Config c;
  c.load_text("harris.k = 0.05\npca.keep_fraction = 0.7\n");
  c.set_assignment("harris.k=0.06");
  CHECK(c.get("harris.k") == "0.06");
  CHECK(c.get("pca.keep_fraction") == "0.7");
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"recognize", "--bogus", "x.pgm"}).code == kExitUsage);
  CHECK(cli({"recognize", "--scenario", "4", "x.pgm"}).code == kExitUsage);
  CHECK(cli({"--set", "harris.nope=1", "detect-roi", "x.pgm"}).code == kExitUsage);
  CHECK(cli({"synth", "--n", "3"}).code == kExitUsage);
  const Run r = cli({"recognize", "--roi", "1,2,3", "x.pgm"});
  CHECK(r.code == kExitUsage);
  CHECK_FALSE(r.err.empty());
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("processing errors exit 1") {
  const Run r = cli({"recognize", "--scenario", "3", "/nonexistent/x.pgm"});
  CHECK(r.code == kExitProcessing);
  CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("synth is byte-identical across runs") {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  REQUIRE(cli({"synth", "--n", "10", "--seed", "7", "--out", a.string()}).code == kExitOk);
  REQUIRE(cli({"synth", "--n", "10", "--seed", "7", "--out", b.string()}).code == kExitOk);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++files;
  }
  CHECK(files == 11);
}

TEST_CASE("recognize, keypoints, detect-roi and preprocess") {
  const fs::path dir = scratch("stages");
  REQUIRE(cli({"synth", "--n", "3", "--seed", "1", "--out", dir.string()}).code == kExitOk);
  const auto entries = load_manifest(dir / "manifest.csv");
  const auto& smile = entries[1];
  const std::string roi = std::to_string(smile.roi->x) + "," + std::to_string(smile.roi->y) + "," +
                          std::to_string(smile.roi->w) + "," + std::to_string(smile.roi->h);

  const Run rec = cli({"--config", kSynthConf, "recognize", "--scenario", "3", "--roi", roi,
                       smile.image_path.string()});
  REQUIRE(rec.code == kExitOk);
  const std::string label = rec.out.substr(0, rec.out.find('\n'));
  CHECK((label == "neutral" || label == "smile" || label == "laugh" || label == "unrecognized"));
  CHECK(rec.out.find("\"scenario\":3") != std::string::npos);

  const Run kp = cli({"keypoints", "--scenario", "1", "--roi", roi, smile.image_path.string()});
  REQUIRE(kp.code == kExitOk);
  CHECK(kp.out.rfind("x,y,score,scale,orientation\n", 0) == 0);
  CHECK(keypoints_from_csv(kp.out).size() > 3);

  const Run det = cli({"detect-roi", smile.image_path.string()});
  CHECK(det.code == kExitOk);
  CHECK(det.out == "0,0,144,96\n");

  const fs::path out = dir / "pre.pgm";
  CHECK(cli({"preprocess", smile.image_path.string(), out.string()}).code == kExitOk);
  CHECK(fs::exists(out));
}

TEST_CASE("evaluate prints or writes the report") {
  const fs::path dir = scratch("evaluate");
  REQUIRE(cli({"synth", "--n", "6", "--seed", "3", "--out", dir.string()}).code == kExitOk);
  const std::string manifest = (dir / "manifest.csv").string();
  const Run csv = cli({"--config", kSynthConf, "evaluate", "--manifest", manifest, "--scenario", "3"});
  REQUIRE(csv.code == kExitOk);
  CHECK(csv.out.rfind("metric,group,value\n", 0) == 0);
  const fs::path report = dir / "report.md";
  const Run md = cli({"evaluate", "--manifest", manifest, "--scenario", "1", "--format", "markdown",
                      "--out", report.string(), "--set", "eval.workers=1"});
  REQUIRE(md.code == kExitOk);
  CHECK(md.out.empty());
  CHECK(slurp(report).rfind("| group |", 0) == 0);
  CHECK(cli({"evaluate", "--manifest", (dir / "none.csv").string()}).code == kExitProcessing);
}

TEST_CASE("LIPKEY_CONFIG names the default config file") {
  const fs::path dir = scratch("env");
  std::ofstream(dir / "bad.conf") << "harris.k = 0.5\n";
  ::setenv("LIPKEY_CONFIG", (dir / "bad.conf").c_str(), 1);
  CHECK(cli({"detect-roi", "x.pgm"}).code == kExitUsage);
  // An explicit file and flags take precedence.
  CHECK(cli({"--config", kSynthConf, "detect-roi", "/nonexistent.pgm"}).code == kExitProcessing);
  ::setenv("LIPKEY_CONFIG", kSynthConf.c_str(), 1);
  CHECK(cli({"--set", "harris.k=0.5", "detect-roi", "x.pgm"}).code == kExitUsage);
  ::unsetenv("LIPKEY_CONFIG");
}
