#include "lipkey/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lipkey/error.hpp"

namespace lipkey {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

struct Wave {
  double fx, fy, phase, amp;
};

std::vector<Wave> texture_waves(const MouthSpec& spec) {
  Rng rng(spec.texture_seed);
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i) {
    const double period = rng.uniform(60.0, 120.0);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / period;
    // Symmetric textures only vary vertically plus an even horizontal term.
    waves.push_back({k * std::cos(angle), k * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
                     spec.texture / 3.0});
  }
  return waves;
}

double background(const MouthSpec& spec, const std::vector<Wave>& waves, double x, double y) {
  double v = spec.skin;
  for (const auto& d : spec.dimples) {
    if (std::abs(x - d.x) < 0.6 && y >= d.y_top && y <= d.y_bottom) v -= 35.0;
  }
  const double dx = x - spec.center_x;
  for (const auto& w : waves) {
    if (spec.symmetric) {
      v += w.amp * std::cos(w.fx * dx) * std::cos(w.fy * y + w.phase);
    } else {
      v += w.amp * std::cos(w.fx * x + w.fy * y + w.phase);
    }
  }
  return v;
}

// Crease positions along the mouth in half-width units, shared by both lips.
std::vector<double> crease_positions(const MouthSpec& s) {
  Rng rng(s.texture_seed ^ 0x5bd1e995ull);
  std::vector<double> out;
  const double step = 5.0 / s.half_width;
  for (double u = step * rng.uniform(0.3, 0.7); u < 0.92; u += step * rng.uniform(0.8, 1.2)) {
    out.push_back(u);
    if (!s.symmetric) out.back() += rng.uniform(-0.01, 0.01);
  }
  return out;
}

bool on_crease(const MouthSpec& s, const std::vector<double>& creases, double u) {
  const double half = 0.5 / s.half_width;
  const double a = std::abs(u);
  for (double c : creases) {
    if (std::abs(a - c) < half) return true;
  }
  return false;
}

// Intensity of the mouth model at a real point, or a negative value when the
// point is plain skin.
double mouth_value(const MouthSpec& s, const std::vector<double>& creases, double x, double y) {
  const double u = (x - s.center_x) / s.half_width;
  const double line_corner = s.center_y;
  if (std::abs(u) >= 1.0) {
    // Dark commissure just past each corner.
    const double dx = std::abs(x - s.center_x) - s.half_width;
    return dx < 2.0 && std::abs(y - line_corner) < 1.2 ? s.lip_dark + 20.0 : -1.0;
  }
  const double bow = 1.0 - u * u;
  const double taper = std::sqrt(bow);
  const double line = s.center_y + s.sag * bow;
  const double upper = 1.0 + 5.0 * taper;
  const double lower = 1.0 + 6.5 * taper;
  const double half_gap = 0.5 * s.gap * bow;
  const double top = line - half_gap;
  const double bottom = line + half_gap;
  const bool crease = on_crease(s, creases, u);
  if (y >= top - upper && y < top - 0.8) return crease ? 88.0 : 118.0;
  if (y > bottom + 0.8 && y <= bottom + lower) return crease ? 98.0 : 128.0;
  if (y >= top - 0.8 && y <= bottom + 0.8) {
    if (s.gap <= 0.0) return s.lip_dark;
    // Open mouth: a band of teeth under the upper lip, dark cavity below.
    const double teeth = 0.4 * s.gap * bow;
    if (y > top + 0.8 && y < top + teeth) {
      const double tooth = std::fmod(std::abs(x - s.center_x) + 3.5, 7.0);
      return tooth < 1.0 ? 150.0 : 225.0;
    }
    return 30.0;
  }
  return -1.0;
}

}  // namespace

constexpr double kDimpleRate = 0.5;

MouthSpec random_mouth(Rng& rng, Expression label, const SynthOptions& opt) {
  MouthSpec m;
  m.label = label;
  m.center_x = (opt.width - 1) / 2.0 + (opt.symmetric ? 0.0 : rng.uniform(-3.0, 3.0));
  m.half_width = rng.uniform(34.0, 40.0);
  m.skin = rng.uniform(150.0, 190.0);
  m.lip_dark = rng.uniform(45.0, 75.0);
  m.texture = rng.uniform(0.75, 1.5);
  m.texture_seed = rng.next();
  m.symmetric = opt.symmetric;
  switch (label) {
    case Expression::Smile:
      m.sag = rng.uniform(8.0, 12.0);
      break;
    case Expression::Laugh:
      m.half_width = rng.uniform(46.0, 52.0);
      m.sag = rng.uniform(12.0, 18.0);
      m.gap = rng.uniform(8.0, 14.0);
      break;
    default:
      m.sag = rng.uniform(-4.0, -2.5);
      break;
  }
  // Vertical placement keeps the lips centered in the frame.
  m.center_y = opt.height / 2.0 - 0.5 * m.sag + (opt.symmetric ? 0.0 : rng.uniform(-2.0, 2.0));
  if (rng.uniform() < kDimpleRate) {
    const double dx = m.half_width + rng.uniform(3.0, 6.0);
    const double reach = rng.uniform(14.0, 16.0);
    const double corner = m.center_y + 0.5 * (m.sag + 0.5 * m.gap);
    if (opt.symmetric) {
      m.dimples.push_back({m.center_x - dx, corner - reach, corner + reach});
      m.dimples.push_back({m.center_x + dx, corner - reach, corner + reach});
    } else {
      const double x = m.center_x + (rng.uniform() < 0.5 ? -dx : dx);
      m.dimples.push_back({x, corner - reach, corner + reach});
    }
  }
  return m;
}

GrayImage render_mouth(const MouthSpec& spec, const SynthOptions& opt) {
  GrayImage img(opt.width, opt.height);
  const auto waves = texture_waves(spec);
  const auto creases = crease_positions(spec);
  constexpr int kSuper = 4;
  for (int y = 0; y < opt.height; ++y) {
    for (int x = 0; x < opt.width; ++x) {
      double acc = 0.0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = x + (sx + 0.5) / kSuper - 0.5;
          const double py = y + (sy + 0.5) / kSuper - 0.5;
          const double m = mouth_value(spec, creases, px, py);
          acc += m >= 0.0 ? m : background(spec, waves, px, py);
        }
      }
      const double v = acc / (kSuper * kSuper);
      img.at(x, y) = quantize(v);
    }
  }
  return img;
}

Rect mouth_roi(const MouthSpec& spec, const SynthOptions& opt) {
  const double top = spec.center_y - std::max(0.0, -spec.sag) - 0.5 * spec.gap - 18.0;
  const double bottom = spec.center_y + std::max(0.0, spec.sag) + 0.5 * spec.gap + 18.0;
  const double left = spec.center_x - spec.half_width - 8.0;
  const double right = spec.center_x + spec.half_width + 8.0;
  Rect r;
  r.x = std::max(0, static_cast<int>(std::floor(left)));
  r.y = std::max(0, static_cast<int>(std::floor(top)));
  r.w = std::min(opt.width, static_cast<int>(std::ceil(right))) - r.x;
  // Mirror-symmetric mouths get a rectangle symmetric about the center column.
  if (opt.symmetric) r.w = opt.width - 2 * r.x;
  r.h = std::min(opt.height, static_cast<int>(std::ceil(bottom))) - r.y;
  return r;
}

std::vector<SynthSample> synth_corpus(int count, std::uint64_t seed, const SynthOptions& opt) {
  if (count < 0) throw ParamError("sample count must be >= 0");
  Rng rng(seed);
  std::vector<SynthSample> out;
  out.reserve(static_cast<std::size_t>(count));
  constexpr Expression kCycle[] = {Expression::Neutral, Expression::Smile, Expression::Laugh};
  for (int i = 0; i < count; ++i) {
    SynthSample s;
    s.spec = random_mouth(rng, kCycle[i % 3], opt);
    s.image = render_mouth(s.spec, opt);
    s.roi = mouth_roi(s.spec, opt);
    char name[64];
    std::snprintf(name, sizeof name, "mouth_%04d_%s", i, std::string(to_string(s.spec.label)).c_str());
    s.name = name;
    out.push_back(std::move(s));
  }
  return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<SynthSample>& corpus) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw FormatError("cannot write manifest in " + dir.string());
  manifest << "path,label,x,y,w,h,category\n";
  for (const auto& s : corpus) {
    write_pgm_file(dir / (s.name + ".pgm"), s.image);
    manifest << s.name << ".pgm," << to_string(s.spec.label) << ',' << s.roi.x << ',' << s.roi.y << ','
             << s.roi.w << ',' << s.roi.h << ",none\n";
  }
}

}  // namespace lipkey
