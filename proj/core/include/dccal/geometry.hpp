#pragma once

#include <string>

namespace dccal {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Physical camera parameters. Lengths in the units named by each field.
struct CameraSpec {
  double focal_length_mm = 0.0;
  double pixel_pitch_um = 0.0;  // native photosite pitch T_s
  int native_width = 0;
  int native_height = 0;
  int preview_width = 0;
  int preview_height = 0;
  double exposure_time_s = 0.0;
  double row_readout_time_s = 0.0;  // per native sensor row

  double native_pitch_mm() const { return pixel_pitch_um * 1e-3; }
  /// Preview frames are modeled as full-sensor downsampling, so the preview
  /// pixel pitch is the native pitch scaled by the resolution ratio.
  double preview_pitch_mm() const {
    return native_pitch_mm() * native_width / preview_width;
  }
  double downsample_ratio() const {
    return static_cast<double>(native_width) / preview_width;
  }

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

/// Physical display parameters.
struct DisplaySpec {
  double pixel_pitch_mm = 0.0;  // T_d
  int width = 0;
  int height = 0;
  double fill_factor = 1.0;     // emissive area fraction of each pixel cell
  double pwm_period_s = 0.0055;
  double brightness_duty = 1.0;

  void validate() const;
};

/// Geometric setup of one experiment. The camera principal axis passes
/// through the barcode center; the display is rotated by `angle_deg` about
/// the vertical axis (one degree of freedom). Positive angle turns the
/// display's left edge toward the camera. The lateral offsets are zero in a
/// calibrated setup and nonzero only under simulated vibration.
struct GeometryConfig {
  double distance_mm = 0.0;  // d: barcode center to optical center
  double angle_deg = 0.0;    // alpha
  double barcode_mm = 0.0;   // m: displayed barcode is m x m
  double offset_x_mm = 0.0;
  double offset_y_mm = 0.0;

  void validate() const;
};

/// The four reference alignment points, in sensor-plane millimetres
/// (relative to the principal point, y up) and in continuous preview pixel
/// coordinates (y down, (0,0) at the top-left image corner).
/// A = top-left, B = top-right, C = bottom-left, D = bottom-right.
struct ReferencePoints {
  Vec2 a_mm, b_mm, c_mm, d_mm;
  Vec2 a_px, b_px, c_px, d_px;
};

/// Closed-form corner positions from the similar-triangle pinhole model.
ReferencePoints compute_reference_points(const CameraSpec& cam, const GeometryConfig& geom);

/// Full 3D rotation-then-perspective-divide projection of a display-plane
/// point (mm, y up) to the sensor plane (mm). Independent of the closed
/// forms above; projecting the four display corners reproduces them.
/// Throws std::domain_error when the rotated point has non-positive depth.
Vec2 project_point(const CameraSpec& cam, const GeometryConfig& geom, Vec2 display_point_mm);

/// Sensor-plane mm -> continuous preview pixel coordinates.
Vec2 mm_to_preview_px(const CameraSpec& cam, Vec2 point_mm);
/// Inverse of mm_to_preview_px.
Vec2 preview_px_to_mm(const CameraSpec& cam, Vec2 point_px);

}  // namespace dccal
