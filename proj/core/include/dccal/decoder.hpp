#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "dccal/channel_sim.hpp"
#include "dccal/geometry.hpp"
#include "dccal/image.hpp"

namespace dccal {

struct DecoderParams {
  int corner_search_radius_px = 4;  // 9x9 candidate window around each hint
  double corner_score_floor = 0.35;
  int binarize_window = 31;  // local-mean window, preview px
  int binarize_offset = 7;   // 8-bit units below the local mean
  double transition_search_modules = 0.45;
  double min_transition_coverage = 0.5;
};

// Sub-pixel barcode corners in preview px: a=TL, b=TR, c=BL, d=BR.
struct CornerSet {
  Vec2 a, b, c, d;
};

struct CornerDetection {
  CornerSet corners;
  double min_score = 0.0;  // weakest corner response, in [0,1]
};

// Plane projective map from barcode grid coordinates (u right, v down,
// both in [0, n]) to preview px; (0,0)->a, (n,0)->b, (0,n)->c, (n,n)->d.
struct Homography {
  std::array<double, 9> h{};

  Vec2 map(double u, double v) const {
    const double w = h[6] * u + h[7] * v + h[8];
    return {(h[0] * u + h[1] * v + h[2]) / w, (h[3] * u + h[4] * v + h[5]) / w};
  }
};

Homography homography_from_corners(const CornerSet& corners, double n);

// Module-center sampling positions, row-major like BarcodeGrid.
struct SamplingGrid {
  int n = 0;
  std::vector<Vec2> centers;
  bool used_fallback = false;     // timing refinement abandoned
  double coverage_top = 0.0;      // fraction of boundaries with a located transition
  double coverage_right = 0.0;

  Vec2 center(int i, int j) const { return centers[static_cast<size_t>(i) * n + j]; }
};

struct DecodeDiagnostics {
  bool undecodable = false;
  bool projective_fallback = false;
  double corner_score_min = 0.0;
  double corner_residual_px = 0.0;  // max displacement from the hinted positions
  double timing_coverage_top = 0.0;
  double timing_coverage_right = 0.0;
};

// n x n decoded bits (1 = dark). For an undecodable frame the bits are
// meaningless and every module counts as an error downstream.
struct DecodedFrame {
  BitImage bits;
  bool undecodable = false;
};

// Refines each hinted corner inside the search window by maximizing the
// corner response (dark inside quadrant against light surround) on the
// binarized frame, then intersects grayscale fits of the corner's two
// boundary edges for the sub-pixel position. nullopt when any response
// stays below the floor.
std::optional<CornerDetection> detect_corners(const CapturedFrame& frame,
                                              const ReferencePoints& hint,
                                              const DecoderParams& params = {});

// Adaptive local-mean threshold: dark iff intensity < window mean - offset.
BitImage binarize(const CapturedFrame& frame, const DecoderParams& params = {});

// Projective base grid from the corners, then slicing lines refined from the
// timing-pattern transitions (top row for columns, right column for rows),
// smoothed by a least-squares polynomial over the located boundaries. Falls
// back to the pure projective grid below the coverage floor.
SamplingGrid synchronize(const BitImage& binary, const CornerSet& corners, int n,
                         const DecoderParams& params = {});

// Mean of a 3x3 patch at each module center against the midpoint of the
// frame's two-class intensity split; darker side decodes to 1.
BitImage demodulate(const CapturedFrame& frame, const SamplingGrid& grid);

std::pair<DecodedFrame, DecodeDiagnostics> decode_frame(const CapturedFrame& frame,
                                                        const ReferencePoints& hint, int n,
                                                        const DecoderParams& params = {});

}  // namespace dccal
