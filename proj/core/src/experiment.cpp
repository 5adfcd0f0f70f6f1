#include "dccal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dccal/barcode.hpp"
#include "dccal/channel_sim.hpp"
#include "dccal/decoder.hpp"

namespace dccal {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lock(err_mutex);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::string frame_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.%s", index, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json geometry_json(const GeometryConfig& g) {
  return json{{"distance_mm", g.distance_mm},
              {"angle_deg", g.angle_deg},
              {"barcode_mm", g.barcode_mm},
              {"offset_x_mm", g.offset_x_mm},
              {"offset_y_mm", g.offset_y_mm}};
}

json region_json(const ErrorRegion& region, uint64_t fingerprint) {
  return json{{"n", region.n},
              {"threshold", region.threshold},
              {"dilation", region.dilation},
              {"modules", region.count()},
              {"fingerprint", fingerprint_hex(fingerprint)}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                                int threads) {
  config.validate();
  fs::create_directories(out_dir / "frames");
  fs::create_directories(out_dir / "decoded");

  const uint64_t fingerprint = config_fingerprint(config);
  write_text(out_dir / "config.txt", canonical_serialize(config));

  try {
    const BarcodeGrid grid = generate_random(config.barcode_n, config.payload_seed);
    write_pbm(out_dir / "truth.pbm", grid.modules);
    const DisplayImage display =
        render_to_display(grid, config.disp, config.geometry.barcode_mm);
    const ReferencePoints refs = compute_reference_points(config.cam, config.geometry);

    // The focus latch settles before the frame loop; the sweep is
    // deterministic, so a failed sweep stays failed and frames fall back to
    // the configured blur.
    FocusState focus{0, 0, config.channel.blur_sigma_um};
    bool sweep_attempted = false;
    if (!config.focus_candidates_um.empty()) {
      sweep_attempted = true;
      focus.focusing = 1;
      const FocusOutcome outcome =
          focus_sweep(display, config.cam, config.geometry, config.focus_candidates_um);
      focus = autofocus_latch(focus, outcome);
      if (focus.counter == 0) focus.blur_sigma_um = config.channel.blur_sigma_um;
    } else {
      focus = FocusState{1, 0, config.channel.blur_sigma_um};
    }

    const int n_frames = config.frames;
    std::vector<DecodedFrame> decoded(static_cast<size_t>(n_frames));
    std::vector<DecodeDiagnostics> diags(static_cast<size_t>(n_frames));
    std::vector<GeometryConfig> realized(static_cast<size_t>(n_frames));
    parallel_for(n_frames, threads, [&](int idx) {
      const CapturedFrame frame = capture_frame(display, config.cam, config.disp,
                                                config.geometry, config.channel, focus, idx);
      write_pgm(out_dir / "frames" / frame_name(idx, "pgm"), frame.pixels);
      auto [dec, diag] = decode_frame(frame, refs, config.barcode_n, config.decoder);
      write_pbm(out_dir / "decoded" / frame_name(idx, "pbm"), dec.bits);
      decoded[idx] = std::move(dec);
      diags[idx] = diag;
      realized[idx] = frame.meta.realized_geom;
    });

    ExperimentResult result;
    result.bundle_dir = out_dir;
    result.focus = focus;
    result.ber = assemble_ber(decoded, grid);
    result.ber.fingerprint = fingerprint;
    for (const auto& d : decoded) result.undecodable_frames += d.undecodable;
    result.region = error_prone_region(result.ber, config.region_top_m, config.region_frac,
                                       config.region_dilation, config.peak_rule);

    write_ber_csv(out_dir / "ber.csv", result.ber);
    write_pgm(out_dir / "ber.pgm", render_heatmap(result.ber));
    {
      BitImage mask(result.region.n, result.region.n);
      mask.data.assign(result.region.mask.begin(), result.region.mask.end());
      write_pbm(out_dir / "region.pbm", mask);
    }
    write_json(out_dir / "region.json", region_json(result.region, fingerprint));

    {
      std::ofstream jsonl(out_dir / "diagnostics.jsonl", std::ios::binary);
      for (int idx = 0; idx < n_frames; ++idx) {
        const auto& d = diags[idx];
        jsonl << json{{"frame", idx},
                      {"undecodable", d.undecodable},
                      {"corner_score_min", d.corner_score_min},
                      {"corner_residual_px", d.corner_residual_px},
                      {"timing_coverage_top", d.timing_coverage_top},
                      {"timing_coverage_right", d.timing_coverage_right},
                      {"projective_fallback", d.projective_fallback},
                      {"realized_geometry", geometry_json(realized[idx])}}
                     .dump()
              << "\n";
      }
    }

    write_json(out_dir / "manifest.json",
               json{{"version", kToolkitVersion},
                    {"fingerprint", fingerprint_hex(fingerprint)},
                    {"camera", config.camera_name},
                    {"display", config.display_name},
                    {"barcode_n", config.barcode_n},
                    {"frames", n_frames},
                    {"seed", config.channel.seed},
                    {"payload_seed", config.payload_seed},
                    {"nominal_geometry", geometry_json(config.geometry)},
                    {"focus",
                     json{{"sweep_attempted", sweep_attempted},
                          {"latched", focus.counter == 1},
                          {"blur_sigma_um", focus.blur_sigma_um}}}});

    uint64_t total_errors = 0;
    uint32_t max_count = 0;
    for (uint32_t c : result.ber.counts) {
      total_errors += c;
      max_count = std::max(max_count, c);
    }
    const double denom = static_cast<double>(result.ber.counts.size()) * n_frames;
    write_json(out_dir / "report.json",
               json{{"status", "ok"},
                    {"fingerprint", fingerprint_hex(fingerprint)},
                    {"mean_ber", static_cast<double>(total_errors) / denom},
                    {"max_module_rate", static_cast<double>(max_count) / n_frames},
                    {"undecodable_frames", result.undecodable_frames},
                    {"region_modules", result.region.count()},
                    {"region_threshold", result.region.threshold}});
    return result;
  } catch (const std::exception& err) {
    write_json(out_dir / "report.json",
               json{{"status", "failed"},
                    {"fingerprint", fingerprint_hex(fingerprint)},
                    {"error", err.what()}});
    throw;
  }
}

ConsistencyReport run_consistency_pair(const ExperimentConfig& config, uint64_t seed1,
                                       uint64_t seed2, const fs::path& out_dir, int threads) {
  ExperimentConfig c1 = config;
  c1.channel.seed = seed1;
  ExperimentConfig c2 = config;
  c2.channel.seed = seed2;
  const ExperimentResult r1 = run_experiment(c1, out_dir / "run1", threads);
  const ExperimentResult r2 = run_experiment(c2, out_dir / "run2", threads);
  const ConsistencyReport report = consistency(r1.region, r2.region);
  write_json(out_dir / "consistency.json",
             json{{"e_c", report.e_c},
                  {"e_a", report.e_a},
                  {"r", report.r},
                  {"seed1", seed1},
                  {"seed2", seed2},
                  {"fingerprint1", fingerprint_hex(r1.ber.fingerprint)},
                  {"fingerprint2", fingerprint_hex(r2.ber.fingerprint)}});
  return report;
}

PerturbationReport run_perturbation_study(const ExperimentConfig& base, double delta_angle_deg,
                                          double delta_distance_mm, const fs::path& out_dir,
                                          int threads) {
  ExperimentConfig rerun = base;
  rerun.channel.seed = base.channel.seed + 1;
  ExperimentConfig pert = base;
  pert.channel.seed = base.channel.seed + 2;
  pert.geometry.angle_deg += delta_angle_deg;
  pert.geometry.distance_mm += delta_distance_mm;

  const ExperimentResult res_base = run_experiment(base, out_dir / "base", threads);
  const ExperimentResult res_rerun = run_experiment(rerun, out_dir / "rerun", threads);
  const ExperimentResult res_pert = run_experiment(pert, out_dir / "perturbed", threads);

  PerturbationReport report;
  report.same = consistency(res_base.region, res_rerun.region);
  report.perturbed = consistency(res_base.region, res_pert.region);
  write_json(out_dir / "perturbation.json",
             json{{"delta_angle_deg", delta_angle_deg},
                  {"delta_distance_mm", delta_distance_mm},
                  {"r_same", report.same.r},
                  {"r_perturbed", report.perturbed.r},
                  {"same", json{{"e_c", report.same.e_c}, {"e_a", report.same.e_a}}},
                  {"perturbed",
                   json{{"e_c", report.perturbed.e_c}, {"e_a", report.perturbed.e_a}}}});
  return report;
}

}  // namespace dccal
