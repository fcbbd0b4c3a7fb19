#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lipkey/brisk.hpp"
#include "lipkey/harris.hpp"
#include "lipkey/preprocess.hpp"
#include "lipkey/recognize.hpp"

namespace lipkey {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognized key with its default.
const std::vector<ConfigKey>& config_keys();

// Flat key/value table. Unknown keys are rejected.
class Config {
 public:
  Config();

  void set(std::string_view key, std::string_view value);
  // "key=value"
  void set_assignment(std::string_view assignment);
  // Line-oriented `key = value`, `#` starts a comment.
  void load_text(std::string_view text);
  void load_file(const std::filesystem::path& path);

  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  int get_int(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// Typed view of a Config for the recognition pipeline.
struct PipelineSettings {
  bool enhance_enabled = true;
  EnhanceParams enhance;
  HarrisParams harris;
  BriskDetectParams brisk;
  int brisk_octaves = 4;
  bool brisk_describe = true;
  double pca_keep_fraction = 0.5;
  double epsilon_y = 2.0;
  double v_max = 1e4;
  int spline_count = 50;
  Thresholds thresholds;
  StateMap state_map;
};

PipelineSettings pipeline_settings(const Config& c);

}  // namespace lipkey
