#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dccal/analysis.hpp"
#include "dccal/channel_sim.hpp"
#include "dccal/decoder.hpp"
#include "dccal/geometry.hpp"

namespace dccal {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

uint64_t fnv1a64(std::string_view bytes);

// Flat "key = value" text with '#' comments. Unknown keys are rejected at
// the ExperimentConfig layer so typos cannot silently fall back to defaults.
class KeyValueFile {
 public:
  static KeyValueFile parse_string(std::string_view text);
  static KeyValueFile parse_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  // Typed getters throw ConfigError on malformed values.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_uint64(const std::string& key, uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;  // comma separated

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Bundled device constants; throws ConfigError for unknown names.
CameraSpec camera_profile(const std::string& name);    // nexus4, nexus5, test_camera
DisplaySpec display_profile(const std::string& name);  // new_ipad, test_display
std::vector<std::string> camera_profile_names();
std::vector<std::string> display_profile_names();

// Everything one experiment needs, with camera/display resolved from the
// named profiles and optionally overridden by explicit keys.
struct ExperimentConfig {
  std::string camera_name = "nexus5";
  std::string display_name = "new_ipad";
  CameraSpec cam;
  DisplaySpec disp;
  GeometryConfig geometry{150.0, 20.0, 100.0, 0.0, 0.0};
  ChannelParams channel;
  int barcode_n = 87;
  uint64_t payload_seed = 1;
  int frames = 100;  // N_I
  std::vector<double> focus_candidates_um;  // empty: no sweep, channel blur used
  int region_top_m = 10;
  double region_frac = 0.5;
  int region_dilation = 3;
  PeakRule peak_rule = PeakRule::kTopValues;
  DecoderParams decoder;

  void validate() const;  // throws ConfigError naming the violated field
};

ExperimentConfig default_experiment_config();
ExperimentConfig load_experiment_config(const KeyValueFile& file);
ExperimentConfig load_experiment_config_file(const std::filesystem::path& path);

// Byte-exact serialization: every effective key, sorted, doubles in %.17g.
// The fingerprint hashes these bytes and is stamped into every artifact.
std::string canonical_serialize(const ExperimentConfig& config);
uint64_t config_fingerprint(const ExperimentConfig& config);
std::string fingerprint_hex(uint64_t fingerprint);

}  // namespace dccal
