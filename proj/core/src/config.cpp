#include "dccal/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dccal {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("config: key '" + key + "' is not a number: '" + value + "'");
  return v;
}

}  // namespace

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

KeyValueFile KeyValueFile::parse_string(std::string_view text) {
  KeyValueFile file;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " has no '='");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: line " + std::to_string(line_no) + " has an empty key");
    if (file.entries_.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    file.entries_[key] = value;
  }
  return file;
}

KeyValueFile KeyValueFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double(key, it->second);
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config: key '" + key + "' is not an integer");
  return i;
}

uint64_t KeyValueFile::get_uint64(const std::string& key, uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string t = trim(it->second);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("config: key '" + key + "' is not an unsigned integer");
  return v;
}

std::vector<double> KeyValueFile::get_double_list(const std::string& key) const {
  const auto it = entries_.find(key);
  std::vector<double> out;
  if (it == entries_.end() || trim(it->second).empty()) return out;
  std::istringstream in(it->second);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(parse_double(key, cell));
  return out;
}

CameraSpec camera_profile(const std::string& name) {
  if (name == "nexus4") return {4.6, 1.1, 3264, 2448, 640, 480, 0.005, 1.36e-5};
  if (name == "nexus5") return {4.0, 1.4, 3264, 2448, 640, 480, 0.005, 1.36e-5};
  if (name == "test_camera") return {4.0, 2.8, 640, 480, 320, 240, 0.005, 6.9e-5};
  throw ConfigError("config: unknown camera profile '" + name + "'");
}

DisplaySpec display_profile(const std::string& name) {
  if (name == "new_ipad") return {0.097, 2048, 1536, 0.7, 0.0055, 1.0};
  if (name == "test_display") return {0.25, 480, 360, 0.7, 0.0055, 1.0};
  throw ConfigError("config: unknown display profile '" + name + "'");
}

std::vector<std::string> camera_profile_names() { return {"nexus4", "nexus5", "test_camera"}; }
std::vector<std::string> display_profile_names() { return {"new_ipad", "test_display"}; }

void ExperimentConfig::validate() const {
  try {
    cam.validate();
    disp.validate();
    geometry.validate();
    channel.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
  if (barcode_n < 3 || barcode_n % 2 == 0)
    throw ConfigError("config: barcode_n must be odd and >= 3");
  if (frames < 1) throw ConfigError("config: frames must be >= 1");
  if (region_top_m < 1) throw ConfigError("config: region_top_m must be >= 1");
  if (region_frac <= 0.0 || region_frac > 1.0)
    throw ConfigError("config: region_frac must be in (0,1]");
  if (region_dilation < 0) throw ConfigError("config: region_dilation must be >= 0");
  for (double s : focus_candidates_um)
    if (s < 0.0) throw ConfigError("config: focus candidates must be >= 0");
  if (decoder.corner_search_radius_px < 1 || decoder.binarize_window < 3 ||
      decoder.binarize_window % 2 == 0)
    throw ConfigError("config: decoder window parameters out of range");
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.cam = camera_profile(cfg.camera_name);
  cfg.disp = display_profile(cfg.display_name);
  cfg.channel.seed = 1;
  // Vibration magnitudes are desk-scale knobs with no measured source;
  // set them to 0 for an undisturbed channel.
  cfg.channel.jitter_sigma_mm = 0.2;
  cfg.channel.jitter_sigma_deg = 0.05;
  return cfg;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "camera", "display",
      "camera_focal_length_mm", "camera_pixel_pitch_um", "camera_native_width",
      "camera_native_height", "camera_preview_width", "camera_preview_height",
      "camera_exposure_time_s", "camera_row_readout_time_s",
      "display_pixel_pitch_mm", "display_width", "display_height", "display_fill_factor",
      "display_pwm_period_s", "display_brightness_duty",
      "distance_mm", "angle_deg", "barcode_mm", "offset_x_mm", "offset_y_mm",
      "barcode_n", "payload_seed", "frames",
      "seed", "blur_sigma_um", "noise_sigma", "jitter_sigma_mm", "jitter_sigma_deg",
      "radial_k1", "pwm_phase_s", "supersample", "focus_candidates_um",
      "region_top_m", "region_frac", "region_dilation", "peak_rule",
      "corner_search_radius_px", "corner_score_floor", "binarize_window", "binarize_offset",
      "transition_search_modules", "min_transition_coverage",
  };
  return keys;
}

}  // namespace

ExperimentConfig load_experiment_config(const KeyValueFile& file) {
  for (const auto& [key, value] : file.entries())
    if (!known_keys().count(key)) throw ConfigError("config: unknown key '" + key + "'");

  ExperimentConfig cfg = default_experiment_config();
  cfg.camera_name = file.get_string("camera", cfg.camera_name);
  cfg.display_name = file.get_string("display", cfg.display_name);
  cfg.cam = camera_profile(cfg.camera_name);
  cfg.disp = display_profile(cfg.display_name);

  cfg.cam.focal_length_mm = file.get_double("camera_focal_length_mm", cfg.cam.focal_length_mm);
  cfg.cam.pixel_pitch_um = file.get_double("camera_pixel_pitch_um", cfg.cam.pixel_pitch_um);
  cfg.cam.native_width = file.get_int("camera_native_width", cfg.cam.native_width);
  cfg.cam.native_height = file.get_int("camera_native_height", cfg.cam.native_height);
  cfg.cam.preview_width = file.get_int("camera_preview_width", cfg.cam.preview_width);
  cfg.cam.preview_height = file.get_int("camera_preview_height", cfg.cam.preview_height);
  cfg.cam.exposure_time_s = file.get_double("camera_exposure_time_s", cfg.cam.exposure_time_s);
  cfg.cam.row_readout_time_s =
      file.get_double("camera_row_readout_time_s", cfg.cam.row_readout_time_s);

  cfg.disp.pixel_pitch_mm = file.get_double("display_pixel_pitch_mm", cfg.disp.pixel_pitch_mm);
  cfg.disp.width = file.get_int("display_width", cfg.disp.width);
  cfg.disp.height = file.get_int("display_height", cfg.disp.height);
  cfg.disp.fill_factor = file.get_double("display_fill_factor", cfg.disp.fill_factor);
  cfg.disp.pwm_period_s = file.get_double("display_pwm_period_s", cfg.disp.pwm_period_s);
  cfg.disp.brightness_duty =
      file.get_double("display_brightness_duty", cfg.disp.brightness_duty);

  cfg.geometry.distance_mm = file.get_double("distance_mm", cfg.geometry.distance_mm);
  cfg.geometry.angle_deg = file.get_double("angle_deg", cfg.geometry.angle_deg);
  cfg.geometry.barcode_mm = file.get_double("barcode_mm", cfg.geometry.barcode_mm);
  cfg.geometry.offset_x_mm = file.get_double("offset_x_mm", cfg.geometry.offset_x_mm);
  cfg.geometry.offset_y_mm = file.get_double("offset_y_mm", cfg.geometry.offset_y_mm);

  cfg.barcode_n = file.get_int("barcode_n", cfg.barcode_n);
  cfg.payload_seed = file.get_uint64("payload_seed", cfg.payload_seed);
  cfg.frames = file.get_int("frames", cfg.frames);

  cfg.channel.seed = file.get_uint64("seed", cfg.channel.seed);
  cfg.channel.blur_sigma_um = file.get_double("blur_sigma_um", cfg.channel.blur_sigma_um);
  cfg.channel.noise_sigma = file.get_double("noise_sigma", cfg.channel.noise_sigma);
  cfg.channel.jitter_sigma_mm = file.get_double("jitter_sigma_mm", cfg.channel.jitter_sigma_mm);
  cfg.channel.jitter_sigma_deg =
      file.get_double("jitter_sigma_deg", cfg.channel.jitter_sigma_deg);
  cfg.channel.radial_k1 = file.get_double("radial_k1", cfg.channel.radial_k1);
  cfg.channel.pwm_phase_s = file.get_double("pwm_phase_s", cfg.channel.pwm_phase_s);
  cfg.channel.supersample = file.get_int("supersample", cfg.channel.supersample);
  if (file.has("focus_candidates_um"))
    cfg.focus_candidates_um = file.get_double_list("focus_candidates_um");

  cfg.region_top_m = file.get_int("region_top_m", cfg.region_top_m);
  cfg.region_frac = file.get_double("region_frac", cfg.region_frac);
  cfg.region_dilation = file.get_int("region_dilation", cfg.region_dilation);
  const std::string rule = file.get_string("peak_rule", "top-values");
  if (rule == "top-values")
    cfg.peak_rule = PeakRule::kTopValues;
  else if (rule == "local-maxima")
    cfg.peak_rule = PeakRule::kLocalMaxima;
  else
    throw ConfigError("config: peak_rule must be 'top-values' or 'local-maxima'");

  cfg.decoder.corner_search_radius_px =
      file.get_int("corner_search_radius_px", cfg.decoder.corner_search_radius_px);
  cfg.decoder.corner_score_floor =
      file.get_double("corner_score_floor", cfg.decoder.corner_score_floor);
  cfg.decoder.binarize_window = file.get_int("binarize_window", cfg.decoder.binarize_window);
  cfg.decoder.binarize_offset = file.get_int("binarize_offset", cfg.decoder.binarize_offset);
  cfg.decoder.transition_search_modules =
      file.get_double("transition_search_modules", cfg.decoder.transition_search_modules);
  cfg.decoder.min_transition_coverage =
      file.get_double("min_transition_coverage", cfg.decoder.min_transition_coverage);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config_file(const std::filesystem::path& path) {
  return load_experiment_config(KeyValueFile::parse_file(path));
}

std::string canonical_serialize(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["camera"] = cfg.camera_name;
  kv["display"] = cfg.display_name;
  kv["camera_focal_length_mm"] = format_double(cfg.cam.focal_length_mm);
  kv["camera_pixel_pitch_um"] = format_double(cfg.cam.pixel_pitch_um);
  kv["camera_native_width"] = std::to_string(cfg.cam.native_width);
  kv["camera_native_height"] = std::to_string(cfg.cam.native_height);
  kv["camera_preview_width"] = std::to_string(cfg.cam.preview_width);
  kv["camera_preview_height"] = std::to_string(cfg.cam.preview_height);
  kv["camera_exposure_time_s"] = format_double(cfg.cam.exposure_time_s);
  kv["camera_row_readout_time_s"] = format_double(cfg.cam.row_readout_time_s);
  kv["display_pixel_pitch_mm"] = format_double(cfg.disp.pixel_pitch_mm);
  kv["display_width"] = std::to_string(cfg.disp.width);
  kv["display_height"] = std::to_string(cfg.disp.height);
  kv["display_fill_factor"] = format_double(cfg.disp.fill_factor);
  kv["display_pwm_period_s"] = format_double(cfg.disp.pwm_period_s);
  kv["display_brightness_duty"] = format_double(cfg.disp.brightness_duty);
  kv["distance_mm"] = format_double(cfg.geometry.distance_mm);
  kv["angle_deg"] = format_double(cfg.geometry.angle_deg);
  kv["barcode_mm"] = format_double(cfg.geometry.barcode_mm);
  kv["offset_x_mm"] = format_double(cfg.geometry.offset_x_mm);
  kv["offset_y_mm"] = format_double(cfg.geometry.offset_y_mm);
  kv["barcode_n"] = std::to_string(cfg.barcode_n);
  kv["payload_seed"] = std::to_string(cfg.payload_seed);
  kv["frames"] = std::to_string(cfg.frames);
  kv["seed"] = std::to_string(cfg.channel.seed);
  kv["blur_sigma_um"] = format_double(cfg.channel.blur_sigma_um);
  kv["noise_sigma"] = format_double(cfg.channel.noise_sigma);
  kv["jitter_sigma_mm"] = format_double(cfg.channel.jitter_sigma_mm);
  kv["jitter_sigma_deg"] = format_double(cfg.channel.jitter_sigma_deg);
  kv["radial_k1"] = format_double(cfg.channel.radial_k1);
  kv["pwm_phase_s"] = format_double(cfg.channel.pwm_phase_s);
  kv["supersample"] = std::to_string(cfg.channel.supersample);
  {
    std::string list;
    for (size_t i = 0; i < cfg.focus_candidates_um.size(); ++i) {
      if (i) list += ",";
      list += format_double(cfg.focus_candidates_um[i]);
    }
    kv["focus_candidates_um"] = list;
  }
  kv["region_top_m"] = std::to_string(cfg.region_top_m);
  kv["region_frac"] = format_double(cfg.region_frac);
  kv["region_dilation"] = std::to_string(cfg.region_dilation);
  kv["peak_rule"] = cfg.peak_rule == PeakRule::kTopValues ? "top-values" : "local-maxima";
  kv["corner_search_radius_px"] = std::to_string(cfg.decoder.corner_search_radius_px);
  kv["corner_score_floor"] = format_double(cfg.decoder.corner_score_floor);
  kv["binarize_window"] = std::to_string(cfg.decoder.binarize_window);
  kv["binarize_offset"] = std::to_string(cfg.decoder.binarize_offset);
  kv["transition_search_modules"] = format_double(cfg.decoder.transition_search_modules);
  kv["min_transition_coverage"] = format_double(cfg.decoder.min_transition_coverage);

  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

uint64_t config_fingerprint(const ExperimentConfig& cfg) {
  return fnv1a64(canonical_serialize(cfg));
}

std::string fingerprint_hex(uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

}  // namespace dccal
