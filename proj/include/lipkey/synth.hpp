#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lipkey/image.hpp"
#include "lipkey/recognize.hpp"

namespace lipkey {

// Deterministic RNG: mt19937_64 bits with hand-written
// conversions (std distributions differ between standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Short vertical skin crease (dimple) beside a mouth corner.
struct Dimple {
  double x = 0.0;
  double y_top = 0.0;
  double y_bottom = 0.0;
};

struct MouthSpec {
  Expression label = Expression::Neutral;
  double center_x = 0.0;
  double center_y = 0.0;
  double half_width = 40.0;
  double sag = 0.0;       // center depth below the corners (px); > 0 curves up
  double gap = 0.0;       // opening height at the center (laugh)
  double lip_dark = 60.0;
  double skin = 170.0;
  double texture = 6.0;   // background texture amplitude
  std::uint64_t texture_seed = 0;
  std::vector<Dimple> dimples;
  bool symmetric = false;
};

struct SynthOptions {
  int width = 144;
  int height = 96;
  bool symmetric = false;  // mirror-symmetric mouths and textures
};

// Curvature bands: neutral sag -4..-2.5 (downturned), smile sag 8..12,
// laugh sag 12..18 with a wider mouth and an open gap of 8..14.
MouthSpec random_mouth(Rng& rng, Expression label, const SynthOptions& opt);
GrayImage render_mouth(const MouthSpec& spec, const SynthOptions& opt);
// Mouth rectangle the renderer guarantees to enclose the lips.
Rect mouth_roi(const MouthSpec& spec, const SynthOptions& opt);

struct SynthSample {
  std::string name;
  MouthSpec spec;
  GrayImage image;
  Rect roi;
};

// `count` samples cycling neutral, smile, laugh; reproducible from seed.
std::vector<SynthSample> synth_corpus(int count, std::uint64_t seed, const SynthOptions& opt = {});

// Writes <dir>/<name>.pgm for every sample plus <dir>/manifest.csv.
void write_corpus(const std::filesystem::path& dir, const std::vector<SynthSample>& corpus);

}  // namespace lipkey
