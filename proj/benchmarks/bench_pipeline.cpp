// Per-frame hot paths at the realistic operating point (dense barcode on a
// phone-class camera). Select one with --benchmark_filter.
#include <benchmark/benchmark.h>

#include <random>

#include "dccal/analysis.hpp"
#include "dccal/barcode.hpp"
#include "dccal/channel_sim.hpp"
#include "dccal/config.hpp"
#include "dccal/decoder.hpp"
#include "dccal/geometry.hpp"

namespace {

using namespace dccal;

struct Scene {
  CameraSpec cam = camera_profile("nexus5");
  DisplaySpec disp = display_profile("new_ipad");
  GeometryConfig geom{150.0, 20.0, 100.0, 0.0, 0.0};
  DisplayImage img;
  ChannelParams ch;
  FocusState focus{1, 0, 0.0};

  Scene() {
    img = render_to_display(generate_random(87, 1), disp, geom.barcode_mm);
    ch.supersample = 2;
    ch.noise_sigma = 5.0;
    ch.seed = 7;
  }
};

const Scene& scene() {
  static const Scene s;
  return s;
}

void BM_CaptureFrame(benchmark::State& state) {
  const Scene& s = scene();
  ChannelParams ch = s.ch;
  ch.supersample = static_cast<int>(state.range(0));
  int frame = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(capture_frame(s.img, s.cam, s.disp, s.geom, ch, s.focus, frame++));
  }
}
BENCHMARK(BM_CaptureFrame)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_DecodeFrame(benchmark::State& state) {
  const Scene& s = scene();
  const CapturedFrame frame = capture_frame(s.img, s.cam, s.disp, s.geom, s.ch, s.focus, 0);
  const ReferencePoints refs = compute_reference_points(s.cam, s.geom);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_frame(frame, refs, 87));
  }
}
BENCHMARK(BM_DecodeFrame)->Unit(benchmark::kMillisecond);

// Whole-sensor cost of the per-row PWM gain, one frame per iteration.
void BM_PwmRowGains(benchmark::State& state) {
  const Scene& s = scene();
  DisplaySpec disp = s.disp;
  disp.brightness_duty = 0.7;
  for (auto _ : state) {
    double sum = 0.0;
    for (int row = 0; row < s.cam.native_height; ++row) {
      sum += pwm_row_gain(row, s.cam, disp, 0.4e-3);
    }
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_PwmRowGains)->Unit(benchmark::kMicrosecond);

void BM_ErrorProneRegion(benchmark::State& state) {
  BerPlot ber;
  ber.n = 87;
  ber.frames = 100;
  ber.counts.resize(static_cast<size_t>(87) * 87);
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<uint32_t> dist(0, 30);
  for (auto& c : ber.counts) c = dist(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(error_prone_region(ber));
  }
}
BENCHMARK(BM_ErrorProneRegion)->Unit(benchmark::kMicrosecond);

void BM_ReferencePoints(benchmark::State& state) {
  const Scene& s = scene();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_reference_points(s.cam, s.geom));
  }
}
BENCHMARK(BM_ReferencePoints);

}  // namespace

BENCHMARK_MAIN();
