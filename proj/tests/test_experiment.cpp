#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dccal/config.hpp"
#include "dccal/experiment.hpp"

using namespace dccal;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg = default_experiment_config();
  cfg.camera_name = "test_camera";
  cfg.display_name = "test_display";
  cfg.cam = camera_profile(cfg.camera_name);
  cfg.disp = display_profile(cfg.display_name);
  cfg.disp.fill_factor = 1.0;
  cfg.geometry = {200.0, 10.0, 60.0, 0.0, 0.0};
  cfg.barcode_n = 21;
  cfg.payload_seed = 7;
  cfg.frames = 3;
  cfg.channel.seed = 99;
  cfg.channel.supersample = 2;
  cfg.channel.noise_sigma = 5.0;
  cfg.channel.jitter_sigma_mm = 0.1;
  cfg.channel.jitter_sigma_deg = 0.05;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("dccal_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<fs::path> sorted_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("experiment bundle has the documented layout and decodes cleanly") {
  const TempDir tmp("exp_layout");
  const ExperimentConfig cfg = small_config();
  const ExperimentResult res = run_experiment(cfg, tmp.path, 1);

  CHECK(res.ber.n == 21);
  CHECK(res.ber.frames == 3);
  CHECK(res.undecodable_frames == 0);
  CHECK(res.ber.fingerprint == config_fingerprint(cfg));

  for (const char* name :
       {"config.txt", "truth.pbm", "manifest.json", "diagnostics.jsonl", "ber.csv",
        "ber.pgm", "region.pbm", "region.json", "report.json"})
    CHECK(fs::exists(tmp.path / name));
  for (int i = 0; i < 3; ++i) {
    char frame[32], dec[32];
    std::snprintf(frame, sizeof frame, "frames/frame_%04d.pgm", i);
    std::snprintf(dec, sizeof dec, "decoded/frame_%04d.pbm", i);
    CHECK(fs::exists(tmp.path / frame));
    CHECK(fs::exists(tmp.path / dec));
  }

  // config.txt is the canonical serialization: reloading it reproduces the
  // exact fingerprint.
  const ExperimentConfig reloaded = load_experiment_config_file(tmp.path / "config.txt");
  CHECK(config_fingerprint(reloaded) == config_fingerprint(cfg));

  // diagnostics has one line per frame.
  std::istringstream diag(slurp(tmp.path / "diagnostics.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(diag, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 3);

  // report.json carries the final status.
  const std::string report = slurp(tmp.path / "report.json");
  CHECK(report.find("\"status\": \"ok\"") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical bundles") {
  const TempDir a("exp_det_a"), b("exp_det_b");
  const ExperimentConfig cfg = small_config();
  run_experiment(cfg, a.path, 1);
  run_experiment(cfg, b.path, 2);  // worker count must not matter

  const auto files_a = sorted_files(a.path);
  const auto files_b = sorted_files(b.path);
  REQUIRE(files_a == files_b);
  for (const auto& rel : files_a) {
    CAPTURE(rel.string());
    CHECK(slurp(a.path / rel) == slurp(b.path / rel));
  }
}

TEST_CASE("single identity-channel frame decodes with zero errors") {
  const TempDir tmp("exp_identity");
  ExperimentConfig cfg = small_config();
  cfg.frames = 1;
  cfg.channel = {};  // no blur, noise, jitter, or distortion
  cfg.channel.supersample = 2;
  cfg.channel.seed = 99;
  const ExperimentResult res = run_experiment(cfg, tmp.path, 1);
  CHECK(res.ber.frames == 1);
  CHECK(res.undecodable_frames == 0);
  for (uint32_t c : res.ber.counts) CHECK(c == 0);
}

TEST_CASE("different seeds change frames but not the layout") {
  const TempDir a("exp_seed_a"), b("exp_seed_b");
  ExperimentConfig cfg = small_config();
  run_experiment(cfg, a.path, 1);
  cfg.channel.seed = 100;
  run_experiment(cfg, b.path, 1);
  CHECK(sorted_files(a.path) == sorted_files(b.path));
  CHECK(slurp(a.path / "frames/frame_0000.pgm") != slurp(b.path / "frames/frame_0000.pgm"));
}

TEST_CASE("a failing pipeline stage leaves a failed report and rethrows") {
  const TempDir tmp("exp_fail");
  ExperimentConfig cfg = small_config();
  cfg.geometry.barcode_mm = 200.0;  // larger than the 120 mm test panel
  CHECK_THROWS(run_experiment(cfg, tmp.path, 1));
  REQUIRE(fs::exists(tmp.path / "report.json"));
  const std::string report = slurp(tmp.path / "report.json");
  CHECK(report.find("\"status\": \"failed\"") != std::string::npos);
  CHECK(report.find("\"error\"") != std::string::npos);
}

TEST_CASE("consistency pair with equal seeds is perfectly consistent") {
  const TempDir tmp("exp_pair");
  const ExperimentConfig cfg = small_config();
  const ConsistencyReport rep = run_consistency_pair(cfg, 5, 5, tmp.path, 1);
  CHECK(rep.r == 1.0);
  CHECK(fs::exists(tmp.path / "run1" / "report.json"));
  CHECK(fs::exists(tmp.path / "run2" / "report.json"));
  CHECK(fs::exists(tmp.path / "consistency.json"));
}

TEST_CASE("zero-delta perturbation study compares three complete bundles") {
  const TempDir tmp("exp_pert");
  ExperimentConfig cfg = small_config();
  cfg.frames = 2;
  const PerturbationReport rep = run_perturbation_study(cfg, 0.0, 0.0, tmp.path, 1);
  for (const char* run : {"base", "rerun", "perturbed"})
    CHECK(fs::exists(tmp.path / run / "ber.csv"));
  CHECK(fs::exists(tmp.path / "perturbation.json"));
  // With zero deltas the "perturbed" run is just another seed of the same
  // geometry; both comparisons are regular consistency scores in [0, 1].
  CHECK(rep.same.r >= 0.0);
  CHECK(rep.same.r <= 1.0);
  CHECK(rep.perturbed.r >= 0.0);
  CHECK(rep.perturbed.r <= 1.0);
}
