#pragma once

#include <cstdint>
#include <filesystem>

#include "dccal/analysis.hpp"
#include "dccal/config.hpp"

namespace dccal {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ExperimentResult {
  BerPlot ber;
  ErrorRegion region;
  FocusState focus;
  int undecodable_frames = 0;
  std::filesystem::path bundle_dir;
};

// Full pipeline into a self-contained bundle directory:
//   config.txt, manifest.json, frames/frame_%04d.pgm, decoded/frame_%04d.pbm,
//   diagnostics.jsonl, ber.csv, ber.pgm, region.pbm, region.json, report.json
// The focus latch is resolved before any frame is captured. Bundle bytes are
// a pure function of the config (worker count never changes results).
// threads <= 0 uses all hardware threads.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir, int threads = 0);

// Two runs with identical geometry and independent channel seeds, in
// out_dir/run1 and out_dir/run2; writes consistency.json with the region
// overlap of the pair.
ConsistencyReport run_consistency_pair(const ExperimentConfig& config, uint64_t seed1,
                                       uint64_t seed2, const std::filesystem::path& out_dir,
                                       int threads = 0);

struct PerturbationReport {
  ConsistencyReport same;       // base vs same-geometry rerun (seed+1)
  ConsistencyReport perturbed;  // base vs perturbed geometry (seed+2)
};

// Bundles in out_dir/base, out_dir/rerun, out_dir/perturbed plus
// perturbation.json comparing the two consistency scores.
PerturbationReport run_perturbation_study(const ExperimentConfig& base, double delta_angle_deg,
                                          double delta_distance_mm,
                                          const std::filesystem::path& out_dir,
                                          int threads = 0);

}  // namespace dccal
