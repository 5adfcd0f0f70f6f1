// Acceptance gate. Run bare to execute every criterion, or pass a single
// criterion number (1..10). Each criterion prints exactly one [PASS]/[FAIL]
// line with its measurements and enforces its own wall-clock bound.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dccal/analysis.hpp"
#include "dccal/barcode.hpp"
#include "dccal/channel_sim.hpp"
#include "dccal/config.hpp"
#include "dccal/decoder.hpp"
#include "dccal/experiment.hpp"
#include "dccal/geometry.hpp"
#include "dccal/moire.hpp"

using namespace dccal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("dccal_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DisplayImage uniform_panel(const DisplaySpec& disp, float emission) {
  DisplayImage img;
  img.emission = ImageF(disp.width, disp.height, emission);
  img.pixel_pitch_mm = disp.pixel_pitch_mm;
  img.fill_factor = disp.fill_factor;
  img.aperture_half = 0.5 * std::sqrt(disp.fill_factor);
  img.center_x_px = disp.width / 2.0;
  img.center_y_px = disp.height / 2.0;
  return img;
}

double row_mean_variance(const ImageU8& img) {
  std::vector<double> means(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    double s = 0.0;
    for (int x = 0; x < img.width; ++x) s += img.at(x, y);
    means[y] = s / img.width;
  }
  double mu = 0.0;
  for (double v : means) mu += v;
  mu /= means.size();
  double var = 0.0;
  for (double v : means) var += (v - mu) * (v - mu);
  return var / means.size();
}

// 1. The published band-free capture distances, both device pairs, meters.
Outcome criterion_moire_table() {
  const auto t0 = std::chrono::steady_clock::now();
  const double expect_n4[5] = {0.21, 0.11, 0.077, 0.060, 0.050};
  const double expect_n5[5] = {0.15, 0.078, 0.055, 0.043, 0.036};

  const MoireDistanceTable table = moire_free_table(
      {{"nexus4+new_ipad", camera_profile("nexus4"), display_profile("new_ipad")},
       {"nexus5+new_ipad", camera_profile("nexus5"), display_profile("new_ipad")}},
      5);
  double worst = 0.0;
  int checked = 0;
  for (const auto& row : table.rows) {
    const double* expect = row.device_pair == "nexus4+new_ipad" ? expect_n4 : expect_n5;
    for (int k = 1; k <= 5; ++k) {
      worst = std::max(worst, std::abs(row.distances_m[k - 1] - expect[k - 1]));
      ++checked;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool pass = checked == 10 && worst <= 0.005 && elapsed < 1.0;
  return {pass, fmt("10 distances, max dev %.4f m <= 0.005 m, %.2f s < 1 s", worst, elapsed)};
}

// 2. Error-bar half-widths at N_I = 500.
Outcome criterion_confidence() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Point {
    double p, expect, tol;
  };
  const Point points[] = {
      {0.1, 0.026, 0.001}, {0.2, 0.036, 0.001}, {0.3, 0.042, 0.0015}, {0.4, 0.044, 0.001}};
  bool pass = true;
  std::string vals;
  for (const Point& pt : points) {
    const double got = confidence_interval(pt.p, 500);
    pass = pass && std::abs(got - pt.expect) <= pt.tol;
    vals += fmt("%sp=%.1f:%.4f", vals.empty() ? "" : " ", pt.p, got);
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 1.0;
  return {pass, vals + fmt(", %.2f s < 1 s", elapsed)};
}

// 3. Closed-form corner positions against the independent 3D projection.
Outcome criterion_projection_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_mm = 0.0;
  long combos = 0;
  for (const char* cam_name : {"nexus4", "nexus5"}) {
    const CameraSpec cam = camera_profile(cam_name);
    for (int alpha = -30; alpha <= 30; ++alpha) {
      for (int d = 100; d <= 300; d += 10) {
        for (double m : {50.0, 100.0}) {
          const GeometryConfig geom{static_cast<double>(d), static_cast<double>(alpha), m,
                                    0.0, 0.0};
          const ReferencePoints rp = compute_reference_points(cam, geom);
          const double h = m / 2.0;
          const struct {
            Vec2 display;
            Vec2 got;
          } corners[] = {{{-h, h}, rp.a_mm},
                         {{h, h}, rp.b_mm},
                         {{-h, -h}, rp.c_mm},
                         {{h, -h}, rp.d_mm}};
          for (const auto& c : corners) {
            const Vec2 proj = project_point(cam, geom, c.display);
            worst_mm = std::max(worst_mm,
                                std::max(std::abs(proj.x - c.got.x), std::abs(proj.y - c.got.y)));
          }
          ++combos;
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  const bool pass = worst_mm < 1e-9 && elapsed < 1.0;
  return {pass,
          fmt("%ld setups, max dev %.2e mm < 1e-9 mm, %.2f s < 1 s", combos, worst_mm, elapsed)};
}

// 4. Identity channel, dense barcode, both devices at their first band-free
// distances, three capture angles: every module of every frame decodes.
Outcome criterion_identity_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = scratch_dir("c4");
  uint64_t total_errors = 0;
  int undecodable = 0;
  int runs = 0;
  for (const auto& [cam_name, distance] :
       std::vector<std::pair<std::string, double>>{{"nexus4", 210.0}, {"nexus5", 150.0}}) {
    for (double alpha : {-20.0, 0.0, 20.0}) {
      ExperimentConfig cfg;
      cfg.camera_name = cam_name;
      cfg.display_name = "new_ipad";
      cfg.cam = camera_profile(cfg.camera_name);
      cfg.disp = display_profile(cfg.display_name);
      cfg.disp.fill_factor = 1.0;
      cfg.geometry = {distance, alpha, 100.0, 0.0, 0.0};
      cfg.barcode_n = 87;
      cfg.payload_seed = 1;
      cfg.frames = 20;
      cfg.channel.seed = 1;
      cfg.channel.supersample = 2;  // identity channel otherwise
      const ExperimentResult res =
          run_experiment(cfg, dir / fmt("run_%s_%+.0f", cam_name.c_str(), alpha), 0);
      for (uint32_t c : res.ber.counts) total_errors += c;
      undecodable += res.undecodable_frames;
      ++runs;
    }
  }
  fs::remove_all(dir);
  const double elapsed = seconds_since(t0);
  const bool pass = total_errors == 0 && undecodable == 0 && elapsed < 120.0;
  return {pass, fmt("%d runs x 20 frames, %llu module errors, %d undecodable, %.0f s < 120 s",
                    runs, static_cast<unsigned long long>(total_errors), undecodable, elapsed)};
}

// 5. Noisy perturbation study with fixed seeds: a same-geometry rerun stays
// consistent, a perturbed geometry does not.
Outcome criterion_perturbation_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = scratch_dir("c5");
  ExperimentConfig cfg;
  cfg.camera_name = "nexus5";
  cfg.display_name = "new_ipad";
  cfg.cam = camera_profile(cfg.camera_name);
  cfg.disp = display_profile(cfg.display_name);
  cfg.geometry = {210.0, 20.0, 100.0, 0.0, 0.0};
  cfg.barcode_n = 87;
  cfg.payload_seed = 11;
  cfg.frames = 100;
  cfg.channel.seed = 424242;
  cfg.channel.supersample = 2;
  cfg.channel.noise_sigma = 12.0;
  cfg.channel.jitter_sigma_mm = 0.3;
  cfg.channel.jitter_sigma_deg = 0.15;
  cfg.channel.radial_k1 = -0.03;
  cfg.channel.blur_sigma_um = 6.0;

  const PerturbationReport rep = run_perturbation_study(cfg, -2.0, -30.0, dir, 0);
  fs::remove_all(dir);
  const double elapsed = seconds_since(t0);
  const bool pass =
      rep.same.r > rep.perturbed.r && rep.same.r >= 0.4 && elapsed < 600.0;
  return {pass, fmt("R_same %.3f > R_perturbed %.3f and R_same >= 0.4, %.0f s < 600 s",
                    rep.same.r, rep.perturbed.r, elapsed)};
}

// 6. Frontal capture of the bare pixel grid (fill 0.7): the alias band holds
// strictly less energy at the first band-free distance than between two.
Outcome criterion_alias_energy() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string vals;
  for (const char* cam_name : {"nexus4", "nexus5"}) {
    const CameraSpec cam = camera_profile(cam_name);
    const DisplaySpec disp = display_profile("new_ipad");  // fill_factor 0.7
    const DisplayImage panel = uniform_panel(disp, 1.0f);
    ChannelParams ch;
    ch.supersample = 2;
    const FocusState focus{1, 0, 0.0};
    const double d1 = moire_free_distance(cam.focal_length_mm, cam.pixel_pitch_um,
                                          disp.pixel_pitch_mm, 1);
    const double d2 = moire_free_distance(cam.focal_length_mm, cam.pixel_pitch_um,
                                          disp.pixel_pitch_mm, 2);
    const double e1 = grid_alias_energy(
        capture_frame(panel, cam, disp, {d1, 0, 100, 0, 0}, ch, focus, 0));
    const double emid = grid_alias_energy(
        capture_frame(panel, cam, disp, {0.5 * (d1 + d2), 0, 100, 0, 0}, ch, focus, 0));
    pass = pass && e1 < emid;
    vals += fmt("%s%s %.3f<%.3f", vals.empty() ? "" : ", ", cam_name, e1, emid);
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 60.0;
  return {pass, vals + fmt(", %.1f s < 60 s", elapsed)};
}

// 7. Rolling shutter against display PWM: banding appears exactly when the
// duty cycle drops below one.
Outcome criterion_pwm_banding() {
  const auto t0 = std::chrono::steady_clock::now();
  const CameraSpec cam = camera_profile("nexus5");  // exposure 1/200 s
  double var_full = -1.0, var_half = -1.0;
  for (double duty : {1.0, 0.5}) {
    DisplaySpec disp = display_profile("new_ipad");  // period 5.5 ms
    disp.fill_factor = 1.0;
    disp.brightness_duty = duty;
    const DisplayImage panel = uniform_panel(disp, static_cast<float>(duty));
    ChannelParams ch;
    ch.supersample = 2;
    const CapturedFrame frame =
        capture_frame(panel, cam, disp, {150, 0, 100, 0, 0}, ch, {1, 0, 0.0}, 0);
    (duty == 1.0 ? var_full : var_half) = row_mean_variance(frame.pixels);
  }
  const double elapsed = seconds_since(t0);
  const bool pass = var_full == 0.0 && var_half > 0.0 && elapsed < 30.0;
  return {pass, fmt("row variance %.3f at duty 1.0, %.3f at duty 0.5, %.1f s < 30 s", var_full,
                    var_half, elapsed)};
}

// 8. One-time autofocus latch: exhaustive transition table, and the latched
// blur never moves again.
Outcome criterion_autofocus_latch() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  int transitions = 0;
  for (int counter : {0, 1}) {
    for (int focusing : {0, 1}) {
      for (bool success : {false, true}) {
        const FocusState before{counter, focusing, 2.0};
        const FocusOutcome outcome{success, 5.5};
        const FocusState after = autofocus_latch(before, outcome);
        ++transitions;
        if (counter == 1) {
          pass = pass && after.counter == 1 && after.focusing == focusing &&
                 after.blur_sigma_um == 2.0;
        } else if (success) {
          pass = pass && after.counter == 1 && after.focusing == 0 &&
                 after.blur_sigma_um == 5.5;
        } else {
          pass = pass && after.counter == 0 && after.focusing == 0 &&
                 after.blur_sigma_um == 2.0;
        }
      }
    }
  }

  // A session of sweep outcomes: after the first success every state is
  // frozen, including the blur that frames would be rendered with.
  const bool outcomes[] = {false, false, true, false, true, false};
  FocusState st{0, 1, 9.0};
  bool latched = false;
  double latched_blur = 0.0;
  for (bool success : outcomes) {
    st = autofocus_latch(st, {success, 3.25});
    if (!latched && st.counter == 1) {
      latched = true;
      latched_blur = st.blur_sigma_um;
    } else if (latched) {
      pass = pass && st.counter == 1 && st.blur_sigma_um == latched_blur;
    }
  }
  pass = pass && latched && latched_blur == 3.25;
  const double elapsed = seconds_since(t0);
  return {pass, fmt("%d transitions verified, post-latch blur constant at %.2f, %.2f s",
                    transitions, latched_blur, elapsed)};
}

// 9. Region overlap against direct set enumeration, plus the single-peak
// worked example.
Outcome criterion_analysis_brute_force() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  long cases = 0;
  for (int m1 = 0; m1 < 512 && pass; ++m1) {
    for (int m2 = 0; m2 < 512; ++m2) {
      ErrorRegion r1, r2;
      r1.n = r2.n = 3;
      r1.mask.resize(9);
      r2.mask.resize(9);
      int ec = 0, ea = 0;
      for (int k = 0; k < 9; ++k) {
        r1.mask[k] = (m1 >> k) & 1;
        r2.mask[k] = (m2 >> k) & 1;
        ec += r1.mask[k] & r2.mask[k];
        ea += r1.mask[k] | r2.mask[k];
      }
      const ConsistencyReport rep = consistency(r1, r2);
      const double want_r = ea == 0 ? 1.0 : static_cast<double>(ec) / ea;
      ++cases;
      if (rep.e_c != ec || rep.e_a != ea || std::abs(rep.r - want_r) > 1e-12) {
        pass = false;
        break;
      }
    }
  }

  // 5x5 grid, one module at rate 0.2: threshold 0.01, and the region is the
  // L1 ball of radius 3 around the peak clipped to the grid, 21 modules.
  BerPlot ber;
  ber.n = 5;
  ber.frames = 100;
  ber.counts.assign(25, 0);
  ber.counts[2 * 5 + 2] = 20;
  const ErrorRegion region = error_prone_region(ber);
  pass = pass && std::abs(region.threshold - 0.01) < 1e-12 && region.count() == 21;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      pass = pass && region.at(i, j) == (std::abs(i - 2) + std::abs(j - 2) <= 3);

  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 30.0;
  return {pass, fmt("%ld mask pairs + 21-module example, %.1f s < 30 s", cases, elapsed)};
}

// 10. Two runs with the same config and seed leave byte-identical bundles.
Outcome criterion_determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = scratch_dir("c10");
  ExperimentConfig cfg;
  cfg.camera_name = "test_camera";
  cfg.display_name = "test_display";
  cfg.cam = camera_profile(cfg.camera_name);
  cfg.disp = display_profile(cfg.display_name);
  cfg.disp.fill_factor = 1.0;
  cfg.geometry = {200.0, 10.0, 60.0, 0.0, 0.0};
  cfg.barcode_n = 21;
  cfg.payload_seed = 7;
  cfg.frames = 5;
  cfg.channel.seed = 99;
  cfg.channel.supersample = 2;
  cfg.channel.noise_sigma = 5.0;
  cfg.channel.jitter_sigma_mm = 0.1;
  cfg.channel.jitter_sigma_deg = 0.05;

  run_experiment(cfg, dir / "a", 1);
  run_experiment(cfg, dir / "b", 2);

  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a"))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), dir / "a"));
  for (const auto& e : fs::recursive_directory_iterator(dir / "b"))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), dir / "b"));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());

  bool pass = rel_a == rel_b && !rel_a.empty();
  int files = 0;
  if (pass) {
    for (const auto& rel : rel_a) {
      std::ifstream fa(dir / "a" / rel, std::ios::binary);
      std::ifstream fb(dir / "b" / rel, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str() != sb.str()) {
        pass = false;
        break;
      }
      ++files;
    }
  }
  fs::remove_all(dir);
  const double elapsed = seconds_since(t0);
  return {pass, fmt("%d files byte-identical across reruns, %.1f s", files, elapsed)};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"band-free distance table", criterion_moire_table},
    {"error-bar half-widths", criterion_confidence},
    {"closed-form vs projective corners", criterion_projection_equivalence},
    {"identity-channel round trip", criterion_identity_round_trip},
    {"perturbation consistency", criterion_perturbation_consistency},
    {"alias-band energy ordering", criterion_alias_energy},
    {"PWM row banding", criterion_pwm_banding},
    {"autofocus latch", criterion_autofocus_latch},
    {"region overlap enumeration", criterion_analysis_brute_force},
    {"bundle determinism", criterion_determinism},
};

int run_one(int index) {
  const Criterion& c = kCriteria[index - 1];
  Outcome outcome;
  try {
    outcome = c.run();
  } catch (const std::exception& err) {
    outcome = {false, std::string("exception: ") + err.what()};
  }
  std::printf("[%s] criterion %d: %s (%s)\n", outcome.pass ? "PASS" : "FAIL", index, c.name,
              outcome.details.c_str());
  std::fflush(stdout);
  return outcome.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
    return 2;
  }
  if (argc == 2) {
    const int index = std::atoi(argv[1]);
    if (index < 1 || index > 10) {
      std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
      return 2;
    }
    return run_one(index);
  }
  int failures = 0;
  for (int i = 1; i <= 10; ++i) failures += run_one(i);
  return failures == 0 ? 0 : 1;
}
