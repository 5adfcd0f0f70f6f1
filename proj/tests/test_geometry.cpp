#include <cmath>
#include <doctest.h>
#include <stdexcept>

#include "dccal/config.hpp"
#include "dccal/geometry.hpp"

using namespace dccal;

namespace {

GeometryConfig geom(double d, double alpha, double m) { return {d, alpha, m, 0.0, 0.0}; }

}  // namespace

TEST_CASE("reference points match independently derived closed-form values") {
  // Hand-derived from the corner projection formulas with f=4, m=100,
  // d=150, alpha=20deg.
  const CameraSpec cam = camera_profile("nexus5");
  const ReferencePoints rp = compute_reference_points(cam, geom(150, 20, 100));
  CHECK(rp.a_mm.x == doctest::Approx(-1.414145586433).epsilon(1e-9));
  CHECK(rp.a_mm.y == doctest::Approx(1.504902300127).epsilon(1e-9));
  CHECK(rp.b_mm.x == doctest::Approx(1.124700128050).epsilon(1e-9));
  CHECK(rp.b_mm.y == doctest::Approx(1.196880876971).epsilon(1e-9));

  const CameraSpec cam4 = camera_profile("nexus4");
  const ReferencePoints rp4 = compute_reference_points(cam4, geom(210, 20, 100));
  CHECK(rp4.a_mm.x == doctest::Approx(-1.120427326269).epsilon(1e-9));
  CHECK(rp4.a_mm.y == doctest::Approx(1.192333856291).epsilon(1e-9));
  CHECK(rp4.b_mm.x == doctest::Approx(0.951687997678).epsilon(1e-9));
  CHECK(rp4.b_mm.y == doctest::Approx(1.012765213461).epsilon(1e-9));
}

TEST_CASE("C and D mirror A and B across the optical axis") {
  const CameraSpec cam = camera_profile("nexus5");
  const ReferencePoints rp = compute_reference_points(cam, geom(173, 14, 80));
  CHECK(rp.c_mm.x == rp.a_mm.x);
  CHECK(rp.c_mm.y == -rp.a_mm.y);
  CHECK(rp.d_mm.x == rp.b_mm.x);
  CHECK(rp.d_mm.y == -rp.b_mm.y);
}

TEST_CASE("frontal capture is left-right symmetric") {
  const CameraSpec cam = camera_profile("nexus5");
  const ReferencePoints rp = compute_reference_points(cam, geom(150, 0, 100));
  CHECK(rp.a_mm.x == doctest::Approx(-rp.b_mm.x).epsilon(1e-15));
  CHECK(rp.a_mm.y == doctest::Approx(rp.b_mm.y).epsilon(1e-15));
  CHECK(rp.a_mm.x == doctest::Approx(-4.0 * 100 / (2 * 150.0)).epsilon(1e-12));
}

TEST_CASE("compute_reference_points agrees with project_point on a parameter grid") {
  double worst = 0.0;
  for (const char* name : {"nexus4", "nexus5"}) {
    const CameraSpec cam = camera_profile(name);
    for (int alpha = -30; alpha <= 30; alpha += 5) {
      for (int d = 100; d <= 300; d += 10) {
        for (double m : {50.0, 100.0}) {
          const GeometryConfig g = geom(d, alpha, m);
          const ReferencePoints rp = compute_reference_points(cam, g);
          const Vec2 a = project_point(cam, g, {-m / 2, m / 2});
          const Vec2 b = project_point(cam, g, {m / 2, m / 2});
          const Vec2 c = project_point(cam, g, {-m / 2, -m / 2});
          const Vec2 dd = project_point(cam, g, {m / 2, -m / 2});
          worst = std::max(worst, std::abs(a.x - rp.a_mm.x));
          worst = std::max(worst, std::abs(a.y - rp.a_mm.y));
          worst = std::max(worst, std::abs(b.x - rp.b_mm.x));
          worst = std::max(worst, std::abs(b.y - rp.b_mm.y));
          worst = std::max(worst, std::abs(c.x - rp.c_mm.x));
          worst = std::max(worst, std::abs(c.y - rp.c_mm.y));
          worst = std::max(worst, std::abs(dd.x - rp.d_mm.x));
          worst = std::max(worst, std::abs(dd.y - rp.d_mm.y));
        }
      }
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("positive angle turns the left edge toward the camera") {
  // The near (left) edge projects larger than the far (right) edge.
  const CameraSpec cam = camera_profile("nexus5");
  const ReferencePoints rp = compute_reference_points(cam, geom(150, 20, 100));
  CHECK(std::abs(rp.a_mm.x) > std::abs(rp.b_mm.x));
  CHECK(rp.a_mm.y > rp.b_mm.y);
}

TEST_CASE("corner height shrinks monotonically with distance") {
  const CameraSpec cam = camera_profile("nexus5");
  double prev = 1e9;
  for (int d = 100; d <= 300; d += 20) {
    const ReferencePoints rp = compute_reference_points(cam, geom(d, 20, 100));
    CHECK(rp.a_mm.y < prev);
    prev = rp.a_mm.y;
  }
}

TEST_CASE("offsets translate the projected center") {
  const CameraSpec cam = camera_profile("nexus5");
  GeometryConfig g = geom(150, 0, 100);
  g.offset_x_mm = 7.0;
  g.offset_y_mm = -3.0;
  const Vec2 center = project_point(cam, g, {0, 0});
  CHECK(center.x == doctest::Approx(4.0 * 7.0 / 150.0).epsilon(1e-12));
  CHECK(center.y == doctest::Approx(4.0 * -3.0 / 150.0).epsilon(1e-12));
}

TEST_CASE("pixel mapping round-trips and uses the preview pitch") {
  const CameraSpec cam = camera_profile("nexus5");
  CHECK(cam.preview_pitch_mm() == doctest::Approx(0.00714).epsilon(1e-12));
  CHECK(cam.downsample_ratio() == doctest::Approx(5.1).epsilon(1e-12));

  const Vec2 px = mm_to_preview_px(cam, {1.3333, 0.0});
  CHECK(px.x == doctest::Approx(320.0 + 186.736694678).epsilon(1e-6));
  CHECK(px.y == doctest::Approx(240.0).epsilon(1e-9));

  for (double x : {-1.2, 0.0, 0.4}) {
    for (double y : {-0.9, 0.3}) {
      const Vec2 back = preview_px_to_mm(cam, mm_to_preview_px(cam, {x, y}));
      CHECK(back.x == doctest::Approx(x).epsilon(1e-12));
      CHECK(back.y == doctest::Approx(y).epsilon(1e-12));
    }
  }
}

TEST_CASE("invalid setups are rejected by name") {
  const CameraSpec cam = camera_profile("nexus5");
  CHECK_THROWS_AS(compute_reference_points(cam, geom(0, 0, 100)), std::invalid_argument);
  CHECK_THROWS_AS(compute_reference_points(cam, geom(150, 0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(compute_reference_points(cam, geom(150, 90, 100)), std::invalid_argument);
  CHECK_THROWS_AS(compute_reference_points(cam, geom(150, -95, 100)), std::invalid_argument);
  // Display plane reaching the camera: d <= (m/2) sin|alpha|.
  CHECK_THROWS_AS(compute_reference_points(cam, geom(17, 20, 100)), std::invalid_argument);

  CameraSpec bad = cam;
  bad.preview_width = bad.native_width + 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cam;
  bad.focal_length_mm = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("points behind the camera plane are rejected") {
  const CameraSpec cam = camera_profile("nexus5");
  const GeometryConfig g = geom(150, 20, 100);
  // x' = -2d/sin(alpha) puts Z below zero for this valid setup.
  const double xprime = -2.0 * 150.0 / std::sin(20.0 * 3.14159265358979 / 180.0);
  CHECK_THROWS_AS(project_point(cam, g, {xprime, 0.0}), std::domain_error);
}
