// dccal: screen-to-camera channel calibration and measurement toolkit.
//
// Stage subcommands (simulate, decode, ber) operate on the same bundle
// layout that `experiment` writes, so a pipeline can be run end to end or
// stage by stage with identical artifacts.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dccal/analysis.hpp"
#include "dccal/barcode.hpp"
#include "dccal/channel_sim.hpp"
#include "dccal/config.hpp"
#include "dccal/decoder.hpp"
#include "dccal/experiment.hpp"
#include "dccal/geometry.hpp"
#include "dccal/image.hpp"
#include "dccal/moire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dccal;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  std::optional<int> frames;
  int threads = 0;
};

ExperimentConfig load_config(const GlobalArgs& g) {
  ExperimentConfig cfg = g.config_path.empty()
                             ? default_experiment_config()
                             : load_experiment_config_file(g.config_path);
  if (g.seed) cfg.channel.seed = *g.seed;
  if (g.frames) cfg.frames = *g.frames;
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
  f << text;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
}

std::string frame_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.%s", index, ext);
  return buf;
}

fs::path require_out(const GlobalArgs& g) {
  if (g.out.empty()) throw ConfigError("--out is required for this subcommand");
  return g.out;
}

json geometry_json(const GeometryConfig& g) {
  return json{{"distance_mm", g.distance_mm},
              {"angle_deg", g.angle_deg},
              {"barcode_mm", g.barcode_mm},
              {"offset_x_mm", g.offset_x_mm},
              {"offset_y_mm", g.offset_y_mm}};
}

// Focus resolution shared by `simulate` and `experiment`: the latch settles
// before any frame is captured, and a failed sweep falls back to the
// configured blur.
FocusState resolve_focus(const ExperimentConfig& cfg, const DisplayImage& display,
                         bool* sweep_attempted) {
  *sweep_attempted = !cfg.focus_candidates_um.empty();
  if (!*sweep_attempted) return FocusState{1, 0, cfg.channel.blur_sigma_um};
  FocusState focus{0, 1, cfg.channel.blur_sigma_um};
  const FocusOutcome outcome =
      focus_sweep(display, cfg.cam, cfg.geometry, cfg.focus_candidates_um);
  focus = autofocus_latch(focus, outcome);
  if (focus.counter == 0) focus.blur_sigma_um = cfg.channel.blur_sigma_um;
  return focus;
}

int cmd_refpoints(const GlobalArgs& g, const ExperimentConfig& cfg) {
  const ReferencePoints rp = compute_reference_points(cfg.cam, cfg.geometry);
  const json j{
      {"camera", cfg.camera_name},
      {"geometry", geometry_json(cfg.geometry)},
      {"preview_pitch_mm", cfg.cam.preview_pitch_mm()},
      {"points_mm",
       {{"a", {rp.a_mm.x, rp.a_mm.y}},
        {"b", {rp.b_mm.x, rp.b_mm.y}},
        {"c", {rp.c_mm.x, rp.c_mm.y}},
        {"d", {rp.d_mm.x, rp.d_mm.y}}}},
      {"points_px",
       {{"a", {rp.a_px.x, rp.a_px.y}},
        {"b", {rp.b_px.x, rp.b_px.y}},
        {"c", {rp.c_px.x, rp.c_px.y}},
        {"d", {rp.d_px.x, rp.d_px.y}}}}};
  emit(j.dump(2) + "\n", g.out);
  return 0;
}

int cmd_moire(const GlobalArgs& g, int k_max, double target_mm) {
  const std::vector<NamedDevicePair> devices = {
      {"nexus4+new_ipad", camera_profile("nexus4"), display_profile("new_ipad")},
      {"nexus5+new_ipad", camera_profile("nexus5"), display_profile("new_ipad")},
  };
  const MoireDistanceTable table = moire_free_table(devices, k_max);
  std::string out = "device_pair,k,distance_m\n";
  char line[128];
  for (const auto& row : table.rows)
    for (int k = 1; k <= table.k_max; ++k) {
      std::snprintf(line, sizeof line, "%s,%d,%.6f\n", row.device_pair.c_str(), k,
                    row.distances_m[k - 1]);
      out += line;
    }
  if (target_mm > 0) {
    for (const auto& dev : devices) {
      const NearestDistance nd = nearest_moire_free_distance(
          target_mm, dev.cam.focal_length_mm, dev.cam.pixel_pitch_um,
          dev.disp.pixel_pitch_mm, k_max);
      std::snprintf(line, sizeof line, "# nearest to %.1f mm for %s: k=%d, %.5f mm\n",
                    target_mm, dev.name.c_str(), nd.k, nd.distance_mm);
      out += line;
    }
  }
  emit(out, g.out);
  return 0;
}

int cmd_generate(const GlobalArgs& g, const ExperimentConfig& cfg) {
  const fs::path dir = require_out(g);
  fs::create_directories(dir);
  const uint64_t payload_seed = g.seed ? *g.seed : cfg.payload_seed;
  const BarcodeGrid grid = generate_random(cfg.barcode_n, payload_seed);
  write_pbm(dir / "barcode.pbm", grid.modules);
  int dark = 0;
  for (uint8_t v : grid.modules.data) dark += v;
  write_json_file(dir / "barcode.json",
                  json{{"n", grid.n},
                       {"payload_seed", payload_seed},
                       {"payload_bits", static_cast<int>(grid.payload.size())},
                       {"dark_modules", dark},
                       {"version", kToolkitVersion}});
  std::cout << (dir / "barcode.pbm").string() << "\n";
  return 0;
}

int cmd_simulate(const GlobalArgs& g, const ExperimentConfig& cfg) {
  const fs::path dir = require_out(g);
  fs::create_directories(dir / "frames");
  const uint64_t fingerprint = config_fingerprint(cfg);
  {
    std::ofstream f(dir / "config.txt", std::ios::binary);
    f << canonical_serialize(cfg);
  }
  const BarcodeGrid grid = generate_random(cfg.barcode_n, cfg.payload_seed);
  write_pbm(dir / "truth.pbm", grid.modules);
  const DisplayImage display = render_to_display(grid, cfg.disp, cfg.geometry.barcode_mm);
  bool sweep_attempted = false;
  const FocusState focus = resolve_focus(cfg, display, &sweep_attempted);
  for (int idx = 0; idx < cfg.frames; ++idx) {
    const CapturedFrame frame =
        capture_frame(display, cfg.cam, cfg.disp, cfg.geometry, cfg.channel, focus, idx);
    write_pgm(dir / "frames" / frame_name(idx, "pgm"), frame.pixels);
  }
  write_json_file(dir / "manifest.json",
                  json{{"version", kToolkitVersion},
                       {"fingerprint", fingerprint_hex(fingerprint)},
                       {"camera", cfg.camera_name},
                       {"display", cfg.display_name},
                       {"barcode_n", cfg.barcode_n},
                       {"frames", cfg.frames},
                       {"seed", cfg.channel.seed},
                       {"payload_seed", cfg.payload_seed},
                       {"nominal_geometry", geometry_json(cfg.geometry)},
                       {"focus",
                        json{{"sweep_attempted", sweep_attempted},
                             {"latched", focus.counter == 1},
                             {"blur_sigma_um", focus.blur_sigma_um}}}});
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_decode(const std::string& in_dir) {
  const fs::path dir = in_dir;
  const ExperimentConfig cfg = load_experiment_config_file(dir / "config.txt");
  const ReferencePoints refs = compute_reference_points(cfg.cam, cfg.geometry);
  fs::create_directories(dir / "decoded");
  std::ofstream jsonl(dir / "diagnostics.jsonl", std::ios::binary);
  int undecodable = 0;
  int idx = 0;
  for (;; ++idx) {
    const fs::path frame_path = dir / "frames" / frame_name(idx, "pgm");
    if (!fs::exists(frame_path)) break;
    CapturedFrame frame;
    frame.pixels = read_pgm(frame_path);
    frame.meta.frame_index = idx;
    auto [dec, diag] = decode_frame(frame, refs, cfg.barcode_n, cfg.decoder);
    write_pbm(dir / "decoded" / frame_name(idx, "pbm"), dec.bits);
    undecodable += diag.undecodable;
    jsonl << json{{"frame", idx},
                  {"undecodable", diag.undecodable},
                  {"corner_score_min", diag.corner_score_min},
                  {"corner_residual_px", diag.corner_residual_px},
                  {"timing_coverage_top", diag.timing_coverage_top},
                  {"timing_coverage_right", diag.timing_coverage_right},
                  {"projective_fallback", diag.projective_fallback}}
                 .dump()
          << "\n";
  }
  if (idx == 0) throw std::runtime_error("no frames found under " + (dir / "frames").string());
  std::cout << "decoded " << idx << " frames, " << undecodable << " undecodable\n";
  return 0;
}

int cmd_ber(const std::string& in_dir) {
  const fs::path dir = in_dir;
  const ExperimentConfig cfg = load_experiment_config_file(dir / "config.txt");
  BarcodeGrid truth;
  truth.modules = read_pbm(dir / "truth.pbm");
  if (truth.modules.width != truth.modules.height)
    throw std::runtime_error("truth.pbm is not square");
  truth.n = truth.modules.width;
  std::vector<DecodedFrame> decoded;
  for (int idx = 0;; ++idx) {
    const fs::path p = dir / "decoded" / frame_name(idx, "pbm");
    if (!fs::exists(p)) break;
    DecodedFrame dec;
    dec.bits = read_pbm(p);
    // A stored all-light plane is how an undecodable frame is serialized;
    // counting it as such keeps stage-wise BER equal to `experiment` output.
    dec.undecodable = true;
    for (uint8_t v : dec.bits.data)
      if (v) {
        dec.undecodable = false;
        break;
      }
    decoded.push_back(std::move(dec));
  }
  BerPlot ber = assemble_ber(decoded, truth);
  ber.fingerprint = config_fingerprint(cfg);
  write_ber_csv(dir / "ber.csv", ber);
  write_pgm(dir / "ber.pgm", render_heatmap(ber));
  uint64_t total = 0;
  for (uint32_t c : ber.counts) total += c;
  std::printf("frames=%u mean_ber=%.6f\n", ber.frames,
              static_cast<double>(total) / (static_cast<double>(ber.counts.size()) * ber.frames));
  return 0;
}

int cmd_consistency(const GlobalArgs& g, const std::string& csv1, const std::string& csv2,
                    int top_m, double frac, int dilation, bool local_maxima) {
  const BerPlot b1 = read_ber_csv(csv1);
  const BerPlot b2 = read_ber_csv(csv2);
  const PeakRule rule = local_maxima ? PeakRule::kLocalMaxima : PeakRule::kTopValues;
  const ErrorRegion r1 = error_prone_region(b1, top_m, frac, dilation, rule);
  const ErrorRegion r2 = error_prone_region(b2, top_m, frac, dilation, rule);
  const ConsistencyReport rep = consistency(r1, r2);
  const bool fp_match = b1.fingerprint == b2.fingerprint;
  const json j{{"e_c", rep.e_c},
               {"e_a", rep.e_a},
               {"r", rep.r},
               {"dilation", dilation},
               {"top_m", top_m},
               {"frac", frac},
               {"threshold_1", r1.threshold},
               {"threshold_2", r2.threshold},
               {"region_modules_1", r1.count()},
               {"region_modules_2", r2.count()},
               {"fingerprint_1", fingerprint_hex(b1.fingerprint)},
               {"fingerprint_2", fingerprint_hex(b2.fingerprint)},
               {"fingerprint_match", fp_match}};
  emit(j.dump(2) + "\n", g.out);
  if (!fp_match)
    std::cerr << "warning: BER plots come from different configs; "
                 "comparison is across geometries\n";
  return 0;
}

int cmd_experiment(const GlobalArgs& g, const ExperimentConfig& cfg) {
  const fs::path dir = require_out(g);
  const ExperimentResult res = run_experiment(cfg, dir, g.threads);
  uint64_t total = 0;
  for (uint32_t c : res.ber.counts) total += c;
  std::printf("bundle=%s fingerprint=%s mean_ber=%.6f region_modules=%d undecodable=%d\n",
              res.bundle_dir.string().c_str(),
              fingerprint_hex(res.ber.fingerprint).c_str(),
              static_cast<double>(total) /
                  (static_cast<double>(res.ber.counts.size()) * res.ber.frames),
              res.region.count(), res.undecodable_frames);
  return 0;
}

int cmd_perturb(const GlobalArgs& g, const ExperimentConfig& cfg, double delta_angle,
                double delta_distance) {
  const fs::path dir = require_out(g);
  const PerturbationReport rep =
      run_perturbation_study(cfg, delta_angle, delta_distance, dir, g.threads);
  std::printf("r_same=%.6f (E_c=%d E_a=%d)  r_perturbed=%.6f (E_c=%d E_a=%d)\n", rep.same.r,
              rep.same.e_c, rep.same.e_a, rep.perturbed.r, rep.perturbed.e_c,
              rep.perturbed.e_a);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"screen-to-camera channel calibration and measurement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config file (key = value)");
  app.add_option("--seed", g.seed, "override channel seed (generate: payload seed)");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--frames", g.frames, "override frame count N_I");
  app.add_option("--threads", g.threads, "worker threads (0 = all hardware threads)");

  auto* refpoints = app.add_subcommand(
      "refpoints", "reference alignment points for the four barcode corners");
  double rp_distance = 0, rp_angle = 0, rp_barcode = 0;
  auto* rp_d = refpoints->add_option("--distance-mm", rp_distance, "override capture distance");
  auto* rp_a = refpoints->add_option("--angle-deg", rp_angle, "override capture angle");
  auto* rp_m = refpoints->add_option("--barcode-mm", rp_barcode, "override barcode side");

  auto* moire = app.add_subcommand("moire", "band-free capture distance table");
  int k_max = 5;
  double target_mm = 0;
  moire->add_option("--k-max", k_max, "largest alias order k")->check(CLI::PositiveNumber);
  moire->add_option("--target-mm", target_mm, "also report nearest band-free distance");

  auto* generate = app.add_subcommand("generate", "emit a barcode bitmap and sidecar");
  auto* simulate = app.add_subcommand("simulate", "capture frames into a bundle directory");
  auto* decode = app.add_subcommand("decode", "decode a bundle's frames");
  std::string decode_in;
  decode->add_option("--in", decode_in, "bundle directory from simulate")->required();
  auto* ber = app.add_subcommand("ber", "assemble the BER plot for a decoded bundle");
  std::string ber_in;
  ber->add_option("--in", ber_in, "bundle directory with decoded frames")->required();

  auto* consistency_cmd =
      app.add_subcommand("consistency", "region overlap R between two BER plots");
  std::string csv1, csv2;
  int top_m = 10, dilation = 3;
  double frac = 0.5;
  bool local_maxima = false;
  consistency_cmd->add_option("csv1", csv1, "first ber.csv")->required();
  consistency_cmd->add_option("csv2", csv2, "second ber.csv")->required();
  consistency_cmd->add_option("--top-m", top_m, "peaks averaged for the threshold");
  consistency_cmd->add_option("--frac", frac, "threshold fraction of the peak mean");
  consistency_cmd->add_option("--dilation", dilation, "region dilation radius D");
  consistency_cmd->add_flag("--local-maxima", local_maxima,
                            "peaks are local maxima instead of top values");

  auto* experiment =
      app.add_subcommand("experiment", "full generate/simulate/decode/analyze bundle");
  auto* perturb = app.add_subcommand("perturb", "consistency under geometry perturbation");
  double delta_angle = -2.0, delta_distance = -30.0;
  perturb->add_option("--delta-angle", delta_angle, "angle perturbation (deg)");
  perturb->add_option("--delta-distance", delta_distance, "distance perturbation (mm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (moire->parsed()) return cmd_moire(g, k_max, target_mm);
    if (consistency_cmd->parsed())
      return cmd_consistency(g, csv1, csv2, top_m, frac, dilation, local_maxima);
    if (decode->parsed()) return cmd_decode(decode_in);
    if (ber->parsed()) return cmd_ber(ber_in);

    ExperimentConfig cfg = load_config(g);
    if (refpoints->parsed()) {
      if (rp_d->count()) cfg.geometry.distance_mm = rp_distance;
      if (rp_a->count()) cfg.geometry.angle_deg = rp_angle;
      if (rp_m->count()) cfg.geometry.barcode_mm = rp_barcode;
      cfg.validate();
      return cmd_refpoints(g, cfg);
    }
    if (generate->parsed()) return cmd_generate(g, cfg);
    if (simulate->parsed()) return cmd_simulate(g, cfg);
    if (experiment->parsed()) return cmd_experiment(g, cfg);
    if (perturb->parsed()) return cmd_perturb(g, cfg, delta_angle, delta_distance);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return 3;
  }
}
