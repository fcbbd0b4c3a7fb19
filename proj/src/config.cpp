#include "lipkey/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lipkey/error.hpp"

namespace lipkey {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(std::string_view s, int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

enum class Kind { Real, Integer, Boolean, Text, StateMapSpec };

struct KeyEntry {
  ConfigKey key;
  Kind kind;
};

const std::vector<KeyEntry>& entries() {
  static const std::vector<KeyEntry> e = {
      {{"enhance.enabled", "true", "apply the mean/variance tone curve"}, Kind::Boolean},
      {{"enhance.alpha", "0.125", "bias speed (stored, unused by the curve)"}, Kind::Real},
      {{"enhance.beta", "0.25", "bias exponent"}, Kind::Real},
      {{"enhance.rho", "0.1", "gain weight"}, Kind::Real},
      {{"enhance.gamma", "0.5", "gain exponent"}, Kind::Real},
      {{"harris.sigma", "1.5", "Gaussian window scale"}, Kind::Real},
      {{"harris.k", "0.04", "trace weight, 0.04..0.06"}, Kind::Real},
      {{"harris.threshold", "50000", "minimum corner response"}, Kind::Real},
      {{"harris.nms_radius", "3", "non-maximum suppression radius (px)"}, Kind::Integer},
      {{"brisk.threshold", "0.01", "FAST threshold relative to 255"}, Kind::Real},
      {{"brisk.octaves", "4", "number of octaves"}, Kind::Integer},
      {{"brisk.describe", "true", "compute orientation and descriptors"}, Kind::Boolean},
      {{"pca.keep_fraction", "0.5", "fraction of corner points kept"}, Kind::Real},
      {{"recognize.epsilon_y", "2", "curvature margin (px)"}, Kind::Real},
      {{"recognize.v_max", "10000", "largest admissible vertex magnitude (px)"}, Kind::Real},
      {{"recognize.spline_count", "50", "spline resampling count"}, Kind::Integer},
      {{"recognize.d1", "2500", "state1 distance: dist > d1"}, Kind::Real},
      {{"recognize.d2", "3000", "state2 distance: dist > d2"}, Kind::Real},
      {{"recognize.d3", "2000", "state3 distance: dist > d3"}, Kind::Real},
      {{"recognize.d4_low", "5000", "state4 distance: dist < d4_low"}, Kind::Real},
      {{"recognize.d4_high", "7000", "state4 distance: dist > d4_high"}, Kind::Real},
      {{"recognize.state_map",
        "state1:smile,state2:smile,state3:laugh,state4:laugh,unrecognized:unrecognized",
        "state to expression mapping"},
       Kind::StateMapSpec},
      {{"roi.face_cascade", "", "face cascade file (empty: no detection)"}, Kind::Text},
      {{"roi.mouth_cascade", "", "mouth cascade file"}, Kind::Text},
      {{"eval.workers", "0", "worker threads (0: hardware concurrency)"}, Kind::Integer},
      {{"eval.rotation_step", "1", "rotation sweep step (degrees)"}, Kind::Real},
      {{"eval.rotation_max", "90", "rotation sweep limit (degrees)"}, Kind::Real},
  };
  return e;
}

const KeyEntry& find_entry(std::string_view key) {
  const auto& e = entries();
  const auto it = std::find_if(e.begin(), e.end(), [&](const KeyEntry& k) { return k.key.name == key; });
  if (it == e.end()) throw ParamError("unknown config key '" + std::string(key) + "'");
  return *it;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

Config::Config() {
  for (const auto& e : entries()) values_[e.key.name] = e.key.default_value;
}

void Config::set(std::string_view key, std::string_view value) {
  const auto& entry = find_entry(key);
  value = trim(value);
  double d = 0.0;
  int i = 0;
  switch (entry.kind) {
    case Kind::Real:
      if (!parse_double(value, d)) throw ParamError(std::string(key) + ": expected a number");
      break;
    case Kind::Integer:
      if (!parse_int(value, i)) throw ParamError(std::string(key) + ": expected an integer");
      break;
    case Kind::Boolean:
      if (value != "true" && value != "false") throw ParamError(std::string(key) + ": expected true/false");
      break;
    case Kind::StateMapSpec:
      StateMap::parse(value);
      break;
    case Kind::Text:
      break;
  }
  values_[entry.key.name] = std::string(value);
}

void Config::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ParamError("expected key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::load_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    try {
      set(trim(body.substr(0, eq)), body.substr(eq + 1));
    } catch (const ParamError& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    load_text(text);
  } catch (const ParseError& e) {
    throw ParamError(path.string() + ": " + e.what());
  }
}

const std::string& Config::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ParamError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

double Config::get_double(std::string_view key) const {
  double d = 0.0;
  if (!parse_double(get(key), d)) throw ParamError(std::string(key) + ": not a number");
  return d;
}

int Config::get_int(std::string_view key) const {
  int i = 0;
  if (!parse_int(get(key), i)) throw ParamError(std::string(key) + ": not an integer");
  return i;
}

bool Config::get_bool(std::string_view key) const { return get(key) == "true"; }

PipelineSettings pipeline_settings(const Config& c) {
  PipelineSettings s;
  s.enhance_enabled = c.get_bool("enhance.enabled");
  s.enhance = {c.get_double("enhance.alpha"), c.get_double("enhance.beta"), c.get_double("enhance.rho"),
               c.get_double("enhance.gamma")};
  s.enhance.validate();
  s.harris = {c.get_double("harris.sigma"), c.get_double("harris.k"), c.get_double("harris.threshold"),
              c.get_int("harris.nms_radius")};
  s.harris.validate();
  s.brisk.threshold_rel = c.get_double("brisk.threshold");
  s.brisk_octaves = c.get_int("brisk.octaves");
  if (s.brisk_octaves < 1) throw ParamError("brisk.octaves must be >= 1");
  s.brisk_describe = c.get_bool("brisk.describe");
  s.pca_keep_fraction = c.get_double("pca.keep_fraction");
  if (!(s.pca_keep_fraction > 0.0 && s.pca_keep_fraction <= 1.0)) {
    throw ParamError("pca.keep_fraction must lie in (0, 1]");
  }
  s.epsilon_y = c.get_double("recognize.epsilon_y");
  s.v_max = c.get_double("recognize.v_max");
  s.spline_count = c.get_int("recognize.spline_count");
  if (s.spline_count < 3) throw ParamError("recognize.spline_count must be >= 3");
  s.thresholds = {c.get_double("recognize.d1"), c.get_double("recognize.d2"), c.get_double("recognize.d3"),
                  c.get_double("recognize.d4_low"), c.get_double("recognize.d4_high")};
  s.thresholds.validate();
  s.state_map = StateMap::parse(c.get("recognize.state_map"));
  return s;
}

}  // namespace lipkey
