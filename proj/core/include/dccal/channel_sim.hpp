#pragma once

#include <cstdint>
#include <vector>

#include "dccal/barcode.hpp"
#include "dccal/geometry.hpp"
#include "dccal/image.hpp"

namespace dccal {

struct ChannelParams {
  double blur_sigma_um = 0.0;     // optical PSF stddev on the sensor, before focus
  double noise_sigma = 0.0;       // additive Gaussian, 8-bit intensity units
  double jitter_sigma_mm = 0.0;   // per-frame stddev of distance and lateral offsets
  double jitter_sigma_deg = 0.0;  // per-frame stddev of the capture angle
  double radial_k1 = 0.0;         // r' = r(1 + k1 r^2), r in focal-length units
  double pwm_phase_s = 0.0;       // PWM wave phase at frame start
  int supersample = 4;            // sub-samples per native photosite per axis
  uint64_t seed = 0;

  void validate() const;  // sigmas >= 0, supersample >= 1
};

// One-time autofocus latch: counter flips to 1 on the first successful
// focus and the chosen blur is then fixed for every later frame.
struct FocusState {
  int counter = 0;
  int focusing = 0;
  double blur_sigma_um = 0.0;
};

struct FocusOutcome {
  bool success = false;
  double blur_sigma_um = 0.0;
};

struct FrameMeta {
  int frame_index = 0;
  uint64_t seed = 0;
  GeometryConfig realized_geom;  // geometry after jitter
  FocusState focus;
};

struct CapturedFrame {
  ImageU8 pixels;  // preview resolution, row 0 top
  FrameMeta meta;
};

// Fraction of the exposure window [row * row_readout + phase, + exposure]
// during which the display's PWM square wave (period pwm_period_s, duty
// brightness_duty, ON at the start of each period) is ON. Closed form.
double pwm_row_gain(int row, const CameraSpec& cam, const DisplaySpec& disp, double phase_s);

// Algorithm: counter==0 starts a focus attempt; SUCCESS latches the chosen
// blur (counter=1, focusing=0); FAILURE resets for a retry next frame;
// counter==1 ignores the outcome entirely.
FocusState autofocus_latch(const FocusState& state, const FocusOutcome& outcome);

// Renders a cheap frame per candidate blur and scores gradient-energy
// contrast; returns the argmax (ties to the smaller sigma), FAILURE when
// every score sits below the contrast floor (featureless scene).
FocusOutcome focus_sweep(const DisplayImage& img, const CameraSpec& cam,
                         const GeometryConfig& geom, const std::vector<double>& candidate_sigmas);

// Zero-mean Gaussian perturbation of distance, lateral offsets (jitter_sigma_mm)
// and angle (jitter_sigma_deg), deterministic per (seed, frame_index).
// Invalid perturbed geometry is redrawn a bounded number of times.
GeometryConfig apply_jitter(const GeometryConfig& geom, const ChannelParams& ch, int frame_index);

// Full capture pipeline: jitter -> supersampled inverse-projection of every
// native photosite onto the display emission map (the step that produces the
// grid beat) -> Gaussian PSF at the focus-chosen width -> radial distortion ->
// per-row PWM gain -> box downsample to preview -> noise, clamp, 8-bit.
// Deterministic per (params.seed, frame_index).
CapturedFrame capture_frame(const DisplayImage& img, const CameraSpec& cam,
                            const DisplaySpec& disp, const GeometryConfig& geom,
                            const ChannelParams& ch, const FocusState& focus, int frame_index);

// Fraction of the frame's spectral energy inside the fixed low-frequency
// band where display-grid beats land when the capture distance is off a
// band-free point. Computed from mean row/column profiles of the central
// half of the frame, Hann-windowed. 0 for a constant frame.
inline constexpr double kAliasBandLo = 0.01;  // cycles per preview pixel
inline constexpr double kAliasBandHi = 0.15;
double grid_alias_energy(const CapturedFrame& frame);

// Where the display-grid fundamental lands after native sampling and the
// native->preview decimation, in cycles per preview pixel (frontal setup).
double predicted_beat_frequency(const CameraSpec& cam, const DisplaySpec& disp,
                                const GeometryConfig& geom);

}  // namespace dccal
