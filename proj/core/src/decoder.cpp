#include "dccal/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dccal {

namespace {

// Gaussian elimination with partial pivoting; A is n x n row-major.
// Returns false for a singular system.
bool solve_linear(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-12) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double m = a[r * n + col] / a[col * n + col];
      for (int c = col; c < n; ++c) a[r * n + c] -= m * a[col * n + c];
      b[r] -= m * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
    b[r] = s / a[r * n + r];
  }
  return true;
}

// Least-squares polynomial fit of ys over xs, degree min(max_degree, m-1).
// xs are normalized to [0,1] by scale before fitting for conditioning.
std::vector<double> polyfit(const std::vector<double>& xs, const std::vector<double>& ys,
                            double scale, int max_degree) {
  const int m = static_cast<int>(xs.size());
  const int deg = std::min(max_degree, m - 1);
  const int k = deg + 1;
  std::vector<double> ata(static_cast<size_t>(k) * k, 0.0);
  std::vector<double> atb(static_cast<size_t>(k), 0.0);
  for (int s = 0; s < m; ++s) {
    double pow_i = 1.0;
    const double t = xs[s] / scale;
    std::vector<double> basis(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      basis[i] = pow_i;
      pow_i *= t;
    }
    for (int i = 0; i < k; ++i) {
      atb[i] += basis[i] * ys[s];
      for (int j = 0; j < k; ++j) ata[i * k + j] += basis[i] * basis[j];
    }
  }
  if (!solve_linear(ata, atb, k)) return {0.0};
  return atb;
}

double polyval(const std::vector<double>& coeffs, double t) {
  double v = 0.0;
  for (size_t i = coeffs.size(); i-- > 0;) v = v * t + coeffs[i];
  return v;
}

struct QuadrantSigns {
  int sx, sy;  // direction pointing into the barcode
};

// Mean binary value (dark fraction) of an r x r quadrant anchored at p.
double quadrant_dark(const BitImage& bin, Vec2 p, int sx, int sy, int r) {
  double s = 0.0;
  for (int i = 1; i <= r; ++i)
    for (int j = 1; j <= r; ++j)
      s += bilinear(bin, p.x + sx * (i - 0.5), p.y + sy * (j - 0.5));
  return s / (r * r);
}

// Corner response: dark fraction inside against light fraction in each of
// the three outward quadrants; the weakest term decides.
double corner_score(const BitImage& bin, Vec2 p, QuadrantSigns inward) {
  constexpr int r = 3;
  const double inside = quadrant_dark(bin, p, inward.sx, inward.sy, r);
  const double out1 = 1.0 - quadrant_dark(bin, p, -inward.sx, inward.sy, r);
  const double out2 = 1.0 - quadrant_dark(bin, p, inward.sx, -inward.sy, r);
  const double out3 = 1.0 - quadrant_dark(bin, p, -inward.sx, -inward.sy, r);
  return std::min(std::min(inside, out1), std::min(out2, out3));
}

// Coarse integer-grid corner search on the binarized frame. The matching
// score plateaus near the optimum, so sub-pixel accuracy comes from the
// edge-intersection refinement below, not from this stage.
std::optional<Vec2> coarse_corner(const BitImage& bin, Vec2 hint, QuadrantSigns inward,
                                  const DecoderParams& params, double& score_out) {
  const int radius = params.corner_search_radius_px;
  int best_dx = 0, best_dy = 0;
  double best = -1.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double s = corner_score(bin, {hint.x + dx, hint.y + dy}, inward);
      if (s > best) {
        best = s;
        best_dx = dx;
        best_dy = dy;
      }
    }
  }
  score_out = best;
  if (best < params.corner_score_floor) return std::nullopt;
  return Vec2{hint.x + best_dx, hint.y + best_dy};
}

// Sub-pixel position of a step edge crossed by a 1D grayscale scan through
// (cx, cy) along `axis` (0: vary x, 1: vary y). dark_side is the sign of the
// dark half along that axis. The level is the local min/max midpoint, which
// tracks plateau droop near the corner; the crossing nearest the scan center
// wins, so neighbouring module edges never capture the fit.
std::optional<double> edge_crossing(const ImageU8& img, double cx, double cy, int axis,
                                    int dark_side, double half_width) {
  constexpr double kStep = 0.25;
  constexpr double kMinContrast = 24.0;
  const int m = static_cast<int>(std::floor(half_width / kStep));
  std::vector<double> vals(static_cast<size_t>(2 * m) + 1);
  for (int s = -m; s <= m; ++s) {
    const double x = axis == 0 ? cx + s * kStep : cx;
    const double y = axis == 0 ? cy : cy + s * kStep;
    vals[static_cast<size_t>(s + m)] = bilinear(img, x, y);
  }
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  if (*hi - *lo < kMinContrast) return std::nullopt;
  const double level = 0.5 * (*lo + *hi);
  const double center = axis == 0 ? cx : cy;
  const double start = center - m * kStep;
  double found = 0.0, found_dist = 1e9;
  for (size_t i = 1; i < vals.size(); ++i) {
    const double a = vals[i - 1], b = vals[i];
    const bool crosses = dark_side > 0 ? (a >= level && b < level) : (a < level && b >= level);
    if (!crosses || std::abs(b - a) < 1e-12) continue;
    const double pos = start + (static_cast<double>(i - 1) + (level - a) / (b - a)) * kStep;
    const double dist = std::abs(pos - center);
    if (dist < found_dist) {
      found_dist = dist;
      found = pos;
    }
  }
  if (found_dist == 1e9) return std::nullopt;
  return found;
}

// The outer boundary provides two clean step edges through each corner, each
// at least one module long (the corner module of the finder or timing
// pattern is always dark). Probes sit a fixed sub-module distance inside so
// they work at any module scale >= ~2.5 px; edge slopes are locked to the
// nominal reference geometry, leaving only the two offsets to measure.
Vec2 edge_intersect_corner(const ImageU8& img, Vec2 coarse, QuadrantSigns inward,
                           double slope_v, double slope_h) {
  constexpr double kHalfWidth = 2.5;
  constexpr double kProbe[3] = {0.8, 1.3, 1.8};
  double p_sum = 0.0;
  int p_cnt = 0;  // vertical edge: x = p + slope_v * (y - coarse.y)
  double r_sum = 0.0;
  int r_cnt = 0;  // horizontal edge: y = r + slope_h * (x - coarse.x)
  for (double t : kProbe) {
    const double sy = coarse.y + inward.sy * t;
    if (auto x = edge_crossing(img, coarse.x + slope_v * (sy - coarse.y), sy, 0, inward.sx,
                               kHalfWidth)) {
      p_sum += *x - slope_v * (sy - coarse.y);
      ++p_cnt;
    }
    const double sx = coarse.x + inward.sx * t;
    if (auto y = edge_crossing(img, sx, coarse.y + slope_h * (sx - coarse.x), 1, inward.sy,
                               kHalfWidth)) {
      r_sum += *y - slope_h * (sx - coarse.x);
      ++r_cnt;
    }
  }
  if (p_cnt == 0 || r_cnt == 0) return coarse;
  const double p = p_sum / p_cnt;
  const double r = r_sum / r_cnt;
  // x = p + slope_v * (y - cy); y = r + slope_h * (x - cx)
  const double den = 1.0 - slope_h * slope_v;
  if (std::abs(den) < 0.5) return coarse;
  const double y = (r + slope_h * (p - coarse.x)) / den;
  const double x = p + slope_v * (y - coarse.y);
  if (std::hypot(x - coarse.x, y - coarse.y) > 2.0) return coarse;
  return {x, y};
}

// dx/dy of the nearly-vertical line through a and b.
double slope_x_of_y(Vec2 a, Vec2 b) {
  const double dy = b.y - a.y;
  return std::abs(dy) < 1e-9 ? 0.0 : (b.x - a.x) / dy;
}

// dy/dx of the nearly-horizontal line through a and b.
double slope_y_of_x(Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  return std::abs(dx) < 1e-9 ? 0.0 : (b.y - a.y) / dx;
}

// Two-class split of the frame histogram maximizing between-class variance;
// returns the midpoint of the class means.
double otsu_midpoint(const ImageU8& img) {
  std::array<uint64_t, 256> hist{};
  for (uint8_t v : img.data) ++hist[v];
  const double total = static_cast<double>(img.data.size());
  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += static_cast<double>(v) * hist[v];

  double best_var = -1.0, w0 = 0.0, sum0 = 0.0;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    sum0 += static_cast<double>(t) * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  if (best_var < 0.0) return sum_all / total;  // constant frame

  double n0 = 0.0, s0 = 0.0;
  for (int v = 0; v <= best_t; ++v) {
    n0 += hist[v];
    s0 += static_cast<double>(v) * hist[v];
  }
  const double mu0 = s0 / n0;
  const double mu1 = (sum_all - s0) / (total - n0);
  return 0.5 * (mu0 + mu1);
}

// Sub-pixel transition positions of the timing pattern along one axis.
// eval(t) samples the binarized frame at grid coordinate t along the line;
// boundary b separates module b-1 from module b (dark at even index).
struct TimingScan {
  std::vector<double> boundary_x;  // located boundaries (grid units)
  std::vector<double> correction;  // located position minus nominal
  double coverage = 0.0;
};

template <typename Eval>
TimingScan scan_timing(int n, double search, Eval&& eval) {
  TimingScan scan;
  constexpr double kStep = 0.05;
  for (int b = 1; b <= n - 1; ++b) {
    // Module b-1 dark for odd b (falling edge at the boundary).
    const bool falling = (b % 2 == 1);
    const int spans = static_cast<int>(std::floor(search / kStep));
    double found = 0.0;
    double found_dist = 1e9;
    double prev_t = b - spans * kStep;
    double prev_v = eval(prev_t);
    for (int s = -spans + 1; s <= spans; ++s) {
      const double t = b + s * kStep;
      const double v = eval(t);
      const bool crosses = falling ? (prev_v >= 0.5 && v < 0.5) : (prev_v < 0.5 && v >= 0.5);
      if (crosses && std::abs(v - prev_v) > 1e-12) {
        const double tc = prev_t + kStep * (0.5 - prev_v) / (v - prev_v);
        const double dist = std::abs(tc - b);
        if (dist < found_dist) {
          found_dist = dist;
          found = tc;
        }
      }
      prev_t = t;
      prev_v = v;
    }
    if (found_dist < 1e9) {
      scan.boundary_x.push_back(static_cast<double>(b));
      scan.correction.push_back(found - b);
    }
  }
  scan.coverage = n > 1 ? static_cast<double>(scan.boundary_x.size()) / (n - 1) : 1.0;
  return scan;
}

// Interior boundary positions after polynomial smoothing of the located
// corrections; endpoints stay anchored at the corners.
std::vector<double> refined_boundaries(int n, const TimingScan& scan) {
  std::vector<double> bounds(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) bounds[k] = static_cast<double>(k);
  if (scan.boundary_x.size() >= 2) {
    const auto coeffs = polyfit(scan.boundary_x, scan.correction, static_cast<double>(n), 3);
    for (int k = 1; k < n; ++k) bounds[k] = k + polyval(coeffs, static_cast<double>(k) / n);
  } else if (scan.boundary_x.size() == 1) {
    for (int k = 1; k < n; ++k) bounds[k] = k + scan.correction[0];
  }
  return bounds;
}

}  // namespace

Homography homography_from_corners(const CornerSet& corners, double n) {
  const std::array<Vec2, 4> src{{{0.0, 0.0}, {n, 0.0}, {0.0, n}, {n, n}}};
  const std::array<Vec2, 4> dst{{corners.a, corners.b, corners.c, corners.d}};
  std::vector<double> a(64, 0.0);
  std::vector<double> b(8, 0.0);
  for (int i = 0; i < 4; ++i) {
    const double u = src[i].x, v = src[i].y;
    const double x = dst[i].x, y = dst[i].y;
    double* r0 = a.data() + (2 * i) * 8;
    double* r1 = a.data() + (2 * i + 1) * 8;
    r0[0] = u; r0[1] = v; r0[2] = 1.0; r0[6] = -u * x; r0[7] = -v * x;
    r1[3] = u; r1[4] = v; r1[5] = 1.0; r1[6] = -u * y; r1[7] = -v * y;
    b[2 * i] = x;
    b[2 * i + 1] = y;
  }
  if (!solve_linear(a, b, 8))
    throw std::invalid_argument("homography_from_corners: degenerate corner set");
  Homography h;
  for (int i = 0; i < 8; ++i) h.h[i] = b[i];
  h.h[8] = 1.0;
  return h;
}

BitImage binarize(const CapturedFrame& frame, const DecoderParams& params) {
  const ImageU8& img = frame.pixels;
  const int w = img.width, h = img.height;
  const int half = params.binarize_window / 2;

  // Summed-area table with one guard row/column.
  std::vector<uint64_t> sat(static_cast<size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    const uint8_t* row = img.row(y);
    uint64_t run = 0;
    for (int x = 0; x < w; ++x) {
      run += row[x];
      sat[static_cast<size_t>(y + 1) * (w + 1) + (x + 1)] =
          sat[static_cast<size_t>(y) * (w + 1) + (x + 1)] + run;
    }
  }
  const auto rect_sum = [&](int x0, int y0, int x1, int y1) {  // inclusive box
    return sat[static_cast<size_t>(y1 + 1) * (w + 1) + (x1 + 1)] -
           sat[static_cast<size_t>(y0) * (w + 1) + (x1 + 1)] -
           sat[static_cast<size_t>(y1 + 1) * (w + 1) + x0] +
           sat[static_cast<size_t>(y0) * (w + 1) + x0];
  };

  BitImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(y - half, 0);
    const int y1 = std::min(y + half, h - 1);
    const uint8_t* row = img.row(y);
    uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(x - half, 0);
      const int x1 = std::min(x + half, w - 1);
      const double mean = static_cast<double>(rect_sum(x0, y0, x1, y1)) /
                          (static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1));
      dst[x] = row[x] < mean - params.binarize_offset ? 1 : 0;
    }
  }
  return out;
}

std::optional<CornerDetection> detect_corners(const CapturedFrame& frame,
                                              const ReferencePoints& hint,
                                              const DecoderParams& params) {
  const BitImage bin = binarize(frame, params);
  const std::array<Vec2, 4> hints{hint.a_px, hint.b_px, hint.c_px, hint.d_px};
  const std::array<QuadrantSigns, 4> inward{{{+1, +1}, {-1, +1}, {+1, -1}, {-1, -1}}};
  // Vertical-edge partner, then horizontal-edge partner, per corner.
  const std::array<std::array<int, 2>, 4> partners{{{2, 1}, {3, 0}, {0, 3}, {1, 2}}};

  CornerDetection det;
  det.min_score = 1.0;
  std::array<Vec2, 4> refined;
  for (int k = 0; k < 4; ++k) {
    double score = 0.0;
    const auto p = coarse_corner(bin, hints[k], inward[k], params, score);
    if (!p) return std::nullopt;
    det.min_score = std::min(det.min_score, score);
    const double slope_v = slope_x_of_y(hints[k], hints[partners[k][0]]);
    const double slope_h = slope_y_of_x(hints[k], hints[partners[k][1]]);
    refined[k] = edge_intersect_corner(frame.pixels, *p, inward[k], slope_v, slope_h);
  }
  det.corners = {refined[0], refined[1], refined[2], refined[3]};
  return det;
}

SamplingGrid synchronize(const BitImage& binary, const CornerSet& corners, int n,
                         const DecoderParams& params) {
  if (n < 3) throw std::invalid_argument("synchronize: n must be >= 3");
  const Homography h = homography_from_corners(corners, static_cast<double>(n));

  const auto top_eval = [&](double u) {
    const Vec2 p = h.map(u, 0.5);
    return bilinear(binary, p.x, p.y);
  };
  const auto right_eval = [&](double v) {
    const Vec2 p = h.map(n - 0.5, v);
    return bilinear(binary, p.x, p.y);
  };
  const TimingScan top = scan_timing(n, params.transition_search_modules, top_eval);
  const TimingScan right = scan_timing(n, params.transition_search_modules, right_eval);

  SamplingGrid grid;
  grid.n = n;
  grid.coverage_top = top.coverage;
  grid.coverage_right = right.coverage;
  grid.centers.resize(static_cast<size_t>(n) * n);

  grid.used_fallback = top.coverage < params.min_transition_coverage ||
                       right.coverage < params.min_transition_coverage;
  std::vector<double> ub(static_cast<size_t>(n) + 1), vb(static_cast<size_t>(n) + 1);
  if (grid.used_fallback) {
    for (int k = 0; k <= n; ++k) ub[k] = vb[k] = static_cast<double>(k);
  } else {
    ub = refined_boundaries(n, top);
    vb = refined_boundaries(n, right);
  }

  for (int i = 0; i < n; ++i) {
    const double vc = 0.5 * (vb[i] + vb[i + 1]);
    for (int j = 0; j < n; ++j) {
      const double uc = 0.5 * (ub[j] + ub[j + 1]);
      grid.centers[static_cast<size_t>(i) * n + j] = h.map(uc, vc);
    }
  }
  return grid;
}

BitImage demodulate(const CapturedFrame& frame, const SamplingGrid& grid) {
  const double mid = otsu_midpoint(frame.pixels);
  BitImage bits(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      const Vec2 c = grid.center(i, j);
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) s += bilinear(frame.pixels, c.x + dx, c.y + dy);
      bits.at(j, i) = (s / 9.0 < mid) ? 1 : 0;
    }
  }
  return bits;
}

std::pair<DecodedFrame, DecodeDiagnostics> decode_frame(const CapturedFrame& frame,
                                                        const ReferencePoints& hint, int n,
                                                        const DecoderParams& params) {
  DecodeDiagnostics diag;
  const auto det = detect_corners(frame, hint, params);
  if (!det) {
    diag.undecodable = true;
    return {DecodedFrame{BitImage(n, n), true}, diag};
  }
  diag.corner_score_min = det->min_score;
  const std::array<Vec2, 4> hints{hint.a_px, hint.b_px, hint.c_px, hint.d_px};
  const std::array<Vec2, 4> found{det->corners.a, det->corners.b, det->corners.c,
                                  det->corners.d};
  for (int k = 0; k < 4; ++k) {
    const double dx = found[k].x - hints[k].x;
    const double dy = found[k].y - hints[k].y;
    diag.corner_residual_px = std::max(diag.corner_residual_px, std::hypot(dx, dy));
  }

  const BitImage bin = binarize(frame, params);
  const SamplingGrid grid = synchronize(bin, det->corners, n, params);
  diag.projective_fallback = grid.used_fallback;
  diag.timing_coverage_top = grid.coverage_top;
  diag.timing_coverage_right = grid.coverage_right;

  return {DecodedFrame{demodulate(frame, grid), false}, diag};
}

}  // namespace dccal
