#include "dccal/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dccal {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

void CameraSpec::validate() const {
  require(focal_length_mm > 0, "camera: focal_length_mm must be > 0");
  require(pixel_pitch_um > 0, "camera: pixel_pitch_um must be > 0");
  require(native_width > 0 && native_height > 0, "camera: native dimensions must be > 0");
  require(preview_width > 0 && preview_height > 0, "camera: preview dimensions must be > 0");
  require(preview_width <= native_width && preview_height <= native_height,
          "camera: preview dimensions must not exceed native dimensions");
  require(exposure_time_s > 0, "camera: exposure_time_s must be > 0");
  require(row_readout_time_s > 0, "camera: row_readout_time_s must be > 0");
}

void DisplaySpec::validate() const {
  require(pixel_pitch_mm > 0, "display: pixel_pitch_mm must be > 0");
  require(width > 0 && height > 0, "display: dimensions must be > 0");
  require(fill_factor > 0 && fill_factor <= 1, "display: fill_factor must be in (0, 1]");
  require(pwm_period_s > 0, "display: pwm_period_s must be > 0");
  require(brightness_duty > 0 && brightness_duty <= 1,
          "display: brightness_duty must be in (0, 1]");
}

void GeometryConfig::validate() const {
  require(distance_mm > 0, "geometry: distance_mm must be > 0");
  require(barcode_mm > 0, "geometry: barcode_mm must be > 0");
  require(std::abs(angle_deg) < 90.0, "geometry: |angle_deg| must be < 90");
  double sin_a = std::sin(std::abs(angle_deg) * kDegToRad);
  require(distance_mm > 0.5 * barcode_mm * sin_a,
          "geometry: barcode intersects the camera plane (requires d > (m/2)*sin|alpha|)");
}

ReferencePoints compute_reference_points(const CameraSpec& cam, const GeometryConfig& geom) {
  cam.validate();
  geom.validate();
  const double f = cam.focal_length_mm;
  const double m = geom.barcode_mm;
  const double d = geom.distance_mm;
  const double a = geom.angle_deg * kDegToRad;
  const double cos_a = std::cos(a);
  const double sin_a = std::sin(a);

  const double near_den = 2.0 * d - m * sin_a;  // A/C edge (left, toward camera for a > 0)
  const double far_den = 2.0 * d + m * sin_a;   // B/D edge

  ReferencePoints rp;
  rp.a_mm = {-f * m * cos_a / near_den, f * m / near_den};
  rp.b_mm = {f * m * cos_a / far_den, f * m / far_den};
  rp.c_mm = {-f * m * cos_a / near_den, -f * m / near_den};
  rp.d_mm = {f * m * cos_a / far_den, -f * m / far_den};
  rp.a_px = mm_to_preview_px(cam, rp.a_mm);
  rp.b_px = mm_to_preview_px(cam, rp.b_mm);
  rp.c_px = mm_to_preview_px(cam, rp.c_mm);
  rp.d_px = mm_to_preview_px(cam, rp.d_mm);
  return rp;
}

Vec2 project_point(const CameraSpec& cam, const GeometryConfig& geom, Vec2 p) {
  const double a = geom.angle_deg * kDegToRad;
  const double x3 = p.x * std::cos(a) + geom.offset_x_mm;
  const double y3 = p.y + geom.offset_y_mm;
  const double z3 = geom.distance_mm + p.x * std::sin(a);
  if (z3 <= 0.0) throw std::domain_error("project_point: non-positive depth");
  const double f = cam.focal_length_mm;
  return {f * x3 / z3, f * y3 / z3};
}

Vec2 mm_to_preview_px(const CameraSpec& cam, Vec2 point_mm) {
  const double pitch = cam.preview_pitch_mm();
  return {cam.preview_width / 2.0 + point_mm.x / pitch,
          cam.preview_height / 2.0 - point_mm.y / pitch};
}

Vec2 preview_px_to_mm(const CameraSpec& cam, Vec2 point_px) {
  const double pitch = cam.preview_pitch_mm();
  return {(point_px.x - cam.preview_width / 2.0) * pitch,
          (cam.preview_height / 2.0 - point_px.y) * pitch};
}

}  // namespace dccal
