#include "dccal/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "rng.hpp"

namespace dccal {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Scene radiance integrated over each native photosite by uniform
// supersampling, through the inverse of the display->sensor projection.
// The per-column terms of the inverse are hoisted out of the row loop.
ImageF render_native(const DisplayImage& img, const CameraSpec& cam, const GeometryConfig& geom,
                     int ss) {
  const int nw = cam.native_width;
  const int nh = cam.native_height;
  const double ts = cam.native_pitch_mm();
  const double f = cam.focal_length_mm;
  const double a = geom.angle_deg * kDegToRad;
  const double cos_a = std::cos(a);
  const double sin_a = std::sin(a);
  const double d = geom.distance_mm;
  const double ox = geom.offset_x_mm;
  const double oy = geom.offset_y_mm;

  const int nsx = nw * ss;
  std::vector<double> xp(nsx), zf(nsx);
  std::vector<char> ok(nsx);
  for (int c = 0; c < nsx; ++c) {
    const double px = (c + 0.5) / ss;
    const double xs = (px - nw / 2.0) * ts;
    const double det = f * cos_a - xs * sin_a;
    ok[c] = det > 1e-9;
    if (!ok[c]) {
      xp[c] = zf[c] = 0.0;
      continue;
    }
    xp[c] = (xs * d - f * ox) / det;
    zf[c] = (d + xp[c] * sin_a) / f;
  }

  ImageF out(nw, nh);
  std::vector<double> acc(static_cast<size_t>(nw));
  const double inv_ss2 = 1.0 / (static_cast<double>(ss) * ss);
  for (int iy = 0; iy < nh; ++iy) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int sy = 0; sy < ss; ++sy) {
      const double py = iy + (sy + 0.5) / ss;
      const double ys = (nh / 2.0 - py) * ts;
      for (int ix = 0; ix < nw; ++ix) {
        double sum = 0.0;
        const int c0 = ix * ss;
        for (int sx = 0; sx < ss; ++sx) {
          const int c = c0 + sx;
          if (ok[c]) sum += img.sample_mm(xp[c], zf[c] * ys - oy);
        }
        acc[ix] += sum;
      }
    }
    float* row = out.row(iy);
    for (int ix = 0; ix < nw; ++ix) row[ix] = static_cast<float>(acc[ix] * inv_ss2);
  }
  return out;
}

void gaussian_blur(ImageF& img, double sigma_px) {
  if (sigma_px <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_px)));
  std::vector<float> kernel(static_cast<size_t>(radius) + 1);
  double norm = 0.0;
  for (int i = 0; i <= radius; ++i) {
    kernel[i] = static_cast<float>(std::exp(-0.5 * (i * i) / (sigma_px * sigma_px)));
    norm += (i == 0 ? 1.0 : 2.0) * kernel[i];
  }
  for (auto& k : kernel) k = static_cast<float>(k / norm);

  const int w = img.width;
  const int h = img.height;
  ImageF tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const float* src = img.row(y);
    float* dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double s = kernel[0] * src[x];
      for (int i = 1; i <= radius; ++i)
        s += kernel[i] * (src[std::max(x - i, 0)] + src[std::min(x + i, w - 1)]);
      dst[x] = static_cast<float>(s);
    }
  }
  for (int y = 0; y < h; ++y) {
    float* dst = img.row(y);
    for (int x = 0; x < w; ++x) {
      double s = kernel[0] * tmp.at(x, y);
      for (int i = 1; i <= radius; ++i)
        s += kernel[i] * (tmp.at(x, std::max(y - i, 0)) + tmp.at(x, std::min(y + i, h - 1)));
      dst[x] = static_cast<float>(s);
    }
  }
}

// Ideal -> observed is r' = r(1 + k1 r^2) in focal-length units; each
// observed pixel samples the ideal plane at the fixed-point inverse.
ImageF apply_radial(const ImageF& src, const CameraSpec& cam, double k1) {
  const double f_px = cam.focal_length_mm / cam.native_pitch_mm();
  const double cx = src.width / 2.0;
  const double cy = src.height / 2.0;
  ImageF dst(src.width, src.height);
  for (int iy = 0; iy < src.height; ++iy) {
    const double ny = (iy + 0.5 - cy) / f_px;
    float* out = dst.row(iy);
    for (int ix = 0; ix < src.width; ++ix) {
      const double nx = (ix + 0.5 - cx) / f_px;
      const double r_obs = std::sqrt(nx * nx + ny * ny);
      double r = r_obs;
      for (int it = 0; it < 4; ++it) r = r_obs / (1.0 + k1 * r * r);
      const double s = r_obs > 1e-12 ? r / r_obs : 1.0;
      out[ix] = static_cast<float>(
          bilinear(src, cx + nx * s * f_px, cy + ny * s * f_px));
    }
  }
  return dst;
}

// Area-weighted mapping from src_n samples down to dst_n, exact for any
// (possibly fractional) ratio.
struct BoxSegments {
  std::vector<int> first;
  std::vector<std::vector<double>> weights;
};

BoxSegments box_segments(int src_n, int dst_n) {
  BoxSegments segs;
  segs.first.resize(static_cast<size_t>(dst_n));
  segs.weights.resize(static_cast<size_t>(dst_n));
  const double ratio = static_cast<double>(src_n) / dst_n;
  for (int j = 0; j < dst_n; ++j) {
    const double lo = j * ratio;
    const double hi = (j + 1) * ratio;
    int i0 = static_cast<int>(std::floor(lo));
    int i1 = std::min(static_cast<int>(std::ceil(hi)), src_n);
    segs.first[j] = i0;
    auto& w = segs.weights[j];
    w.resize(static_cast<size_t>(i1 - i0));
    for (int i = i0; i < i1; ++i) {
      const double overlap = std::min<double>(i + 1, hi) - std::max<double>(i, lo);
      w[i - i0] = overlap / ratio;
    }
  }
  return segs;
}

ImageF box_downsample(const ImageF& src, int pw, int ph) {
  const BoxSegments hseg = box_segments(src.width, pw);
  const BoxSegments vseg = box_segments(src.height, ph);

  ImageF mid(pw, src.height);
  for (int y = 0; y < src.height; ++y) {
    const float* in = src.row(y);
    float* out = mid.row(y);
    for (int j = 0; j < pw; ++j) {
      double s = 0.0;
      const auto& w = hseg.weights[j];
      const int i0 = hseg.first[j];
      for (size_t k = 0; k < w.size(); ++k) s += w[k] * in[i0 + k];
      out[j] = static_cast<float>(s);
    }
  }
  ImageF out(pw, ph);
  for (int j = 0; j < ph; ++j) {
    float* dst = out.row(j);
    const auto& w = vseg.weights[j];
    const int i0 = vseg.first[j];
    for (int x = 0; x < pw; ++x) {
      double s = 0.0;
      for (size_t k = 0; k < w.size(); ++k) s += w[k] * mid.at(x, i0 + static_cast<int>(k));
      dst[x] = static_cast<float>(s);
    }
  }
  return out;
}

double contrast_score(const ImageF& p) {
  double s = 0.0;
  long count = 0;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x + 1 < p.width; ++x) {
      const double d = 255.0 * (p.at(x + 1, y) - p.at(x, y));
      s += d * d;
      ++count;
    }
  }
  for (int y = 0; y + 1 < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const double d = 255.0 * (p.at(x, y + 1) - p.at(x, y));
      s += d * d;
      ++count;
    }
  }
  return count > 0 ? s / count : 0.0;
}

}  // namespace

void ChannelParams::validate() const {
  if (blur_sigma_um < 0 || noise_sigma < 0 || jitter_sigma_mm < 0 || jitter_sigma_deg < 0)
    throw std::invalid_argument("channel: sigmas must be >= 0");
  if (supersample < 1) throw std::invalid_argument("channel: supersample must be >= 1");
}

namespace {
// Cumulative ON time of the square wave over [0, t); periodic for t < 0 too.
double pwm_on_time(double t, double period, double duty) {
  const double cycles = std::floor(t / period);
  const double rem = t - cycles * period;
  return cycles * duty * period + std::min(rem, duty * period);
}
}  // namespace

double pwm_row_gain(int row, const CameraSpec& cam, const DisplaySpec& disp, double phase_s) {
  if (disp.brightness_duty >= 1.0) return 1.0;
  const double t0 = row * cam.row_readout_time_s + phase_s;
  const double t1 = t0 + cam.exposure_time_s;
  const double on = pwm_on_time(t1, disp.pwm_period_s, disp.brightness_duty) -
                    pwm_on_time(t0, disp.pwm_period_s, disp.brightness_duty);
  return on / cam.exposure_time_s;
}

FocusState autofocus_latch(const FocusState& state, const FocusOutcome& outcome) {
  if (state.counter == 1) return state;
  FocusState next = state;
  next.focusing = 0;
  if (outcome.success) {
    next.counter = 1;
    next.blur_sigma_um = outcome.blur_sigma_um;
  } else {
    next.counter = 0;
  }
  return next;
}

FocusOutcome focus_sweep(const DisplayImage& img, const CameraSpec& cam,
                         const GeometryConfig& geom,
                         const std::vector<double>& candidate_sigmas) {
  if (candidate_sigmas.empty())
    throw std::invalid_argument("focus_sweep: empty candidate list");
  cam.validate();
  geom.validate();

  std::vector<double> sigmas = candidate_sigmas;
  std::sort(sigmas.begin(), sigmas.end());

  const ImageF native = render_native(img, cam, geom, 1);
  constexpr double kContrastFloor = 1.0;  // squared 8-bit units per pixel pair
  FocusOutcome best{false, sigmas.front()};
  double best_score = -1.0;
  for (double sigma : sigmas) {
    ImageF plane = native;
    gaussian_blur(plane, sigma / cam.pixel_pitch_um);
    const double score =
        contrast_score(box_downsample(plane, cam.preview_width, cam.preview_height));
    if (score > best_score) {  // strict: ties keep the smaller sigma
      best_score = score;
      best.blur_sigma_um = sigma;
    }
  }
  best.success = best_score >= kContrastFloor;
  return best;
}

GeometryConfig apply_jitter(const GeometryConfig& geom, const ChannelParams& ch,
                            int frame_index) {
  if (ch.jitter_sigma_mm <= 0.0 && ch.jitter_sigma_deg <= 0.0) return geom;
  auto eng = rng::frame_engine(ch.seed, rng::kJitter, static_cast<uint64_t>(frame_index));
  for (int attempt = 0; attempt < 16; ++attempt) {
    GeometryConfig g = geom;
    g.distance_mm += rng::normal(eng, ch.jitter_sigma_mm);
    g.offset_x_mm += rng::normal(eng, ch.jitter_sigma_mm);
    g.offset_y_mm += rng::normal(eng, ch.jitter_sigma_mm);
    g.angle_deg += rng::normal(eng, ch.jitter_sigma_deg);
    try {
      g.validate();
      return g;
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("apply_jitter: no valid geometry within the retry bound");
}

CapturedFrame capture_frame(const DisplayImage& img, const CameraSpec& cam,
                            const DisplaySpec& disp, const GeometryConfig& geom,
                            const ChannelParams& ch, const FocusState& focus,
                            int frame_index) {
  cam.validate();
  disp.validate();
  geom.validate();
  ch.validate();

  const GeometryConfig g = apply_jitter(geom, ch, frame_index);

  ImageF native = render_native(img, cam, g, ch.supersample);
  gaussian_blur(native, focus.blur_sigma_um / cam.pixel_pitch_um);
  if (ch.radial_k1 != 0.0) native = apply_radial(native, cam, ch.radial_k1);
  if (disp.brightness_duty < 1.0) {
    for (int iy = 0; iy < native.height; ++iy) {
      const float gain = static_cast<float>(pwm_row_gain(iy, cam, disp, ch.pwm_phase_s));
      float* row = native.row(iy);
      for (int ix = 0; ix < native.width; ++ix) row[ix] *= gain;
    }
  }
  const ImageF preview = box_downsample(native, cam.preview_width, cam.preview_height);

  CapturedFrame frame;
  frame.pixels = ImageU8(cam.preview_width, cam.preview_height);
  auto eng = rng::frame_engine(ch.seed, rng::kNoise, static_cast<uint64_t>(frame_index));
  const bool noisy = ch.noise_sigma > 0.0;
  for (size_t i = 0; i < preview.data.size(); ++i) {
    double v = 255.0 * preview.data[i];
    if (noisy) v += rng::normal(eng, ch.noise_sigma);
    frame.pixels.data[i] =
        static_cast<uint8_t>(std::clamp<long>(std::llround(v), 0, 255));
  }
  frame.meta = {frame_index, ch.seed, g, focus};
  return frame;
}

namespace {
// Band and total spectral power of a 1D profile, mean-subtracted and
// Hann-windowed. Direct DFT; profiles are a few hundred samples.
void profile_energy(const std::vector<double>& prof, double& band, double& total) {
  const int n = static_cast<int>(prof.size());
  if (n < 8) return;
  double mean = 0.0;
  for (double v : prof) mean += v;
  mean /= n;
  std::vector<double> w(prof.size());
  for (int i = 0; i < n; ++i)
    w[i] = (prof[i] - mean) * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  for (int b = 1; b <= n / 2; ++b) {
    double re = 0.0, im = 0.0;
    const double omega = 2.0 * std::numbers::pi * b / n;
    for (int i = 0; i < n; ++i) {
      re += w[i] * std::cos(omega * i);
      im -= w[i] * std::sin(omega * i);
    }
    const double p = re * re + im * im;
    const double freq = static_cast<double>(b) / n;
    total += p;
    if (freq >= kAliasBandLo && freq <= kAliasBandHi) band += p;
  }
}
}  // namespace

double grid_alias_energy(const CapturedFrame& frame) {
  const ImageU8& p = frame.pixels;
  const int x0 = p.width / 4, x1 = 3 * p.width / 4;
  const int y0 = p.height / 4, y1 = 3 * p.height / 4;
  if (x1 - x0 < 8 || y1 - y0 < 8) return 0.0;

  std::vector<double> cols(static_cast<size_t>(x1 - x0), 0.0);
  std::vector<double> rows(static_cast<size_t>(y1 - y0), 0.0);
  for (int y = y0; y < y1; ++y) {
    const uint8_t* row = p.row(y);
    for (int x = x0; x < x1; ++x) {
      cols[x - x0] += row[x];
      rows[y - y0] += row[x];
    }
  }
  for (auto& v : cols) v /= (y1 - y0);
  for (auto& v : rows) v /= (x1 - x0);

  double band = 0.0, total = 0.0;
  profile_energy(cols, band, total);
  profile_energy(rows, band, total);
  return total > 1e-12 ? band / total : 0.0;
}

double predicted_beat_frequency(const CameraSpec& cam, const DisplaySpec& disp,
                                const GeometryConfig& geom) {
  const double pitch_native_px = disp.pixel_pitch_mm * cam.focal_length_mm /
                                 (geom.distance_mm * cam.native_pitch_mm());
  const auto fold = [](double f) {
    f = std::fmod(f, 1.0);
    if (f < 0.0) f += 1.0;
    return f > 0.5 ? 1.0 - f : f;
  };
  const double native_folded = fold(1.0 / pitch_native_px);
  return fold(native_folded * cam.downsample_ratio());
}

}  // namespace dccal
