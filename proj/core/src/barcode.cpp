#include "dccal/barcode.hpp"

#include <random>
#include <stdexcept>

namespace dccal {

int payload_capacity(int n) {
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("barcode: module count must be odd and >= 3");
  return (n - 2) * (n - 2);
}

BarcodeGrid generate(int n, const std::vector<uint8_t>& payload) {
  const int capacity = payload_capacity(n);
  if (static_cast<int>(payload.size()) != capacity)
    throw std::invalid_argument("barcode: payload must hold exactly (n-2)^2 bits");

  BarcodeGrid grid;
  grid.n = n;
  grid.payload = payload;
  grid.modules = BitImage(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      uint8_t bit;
      if (j == 0 || i == n - 1)
        bit = 1;  // finder L
      else if (i == 0)
        bit = static_cast<uint8_t>(j % 2 == 0);  // top timing
      else if (j == n - 1)
        bit = static_cast<uint8_t>(i % 2 == 0);  // right timing
      else
        bit = payload[static_cast<size_t>(i - 1) * (n - 2) + (j - 1)] ? 1 : 0;
      grid.modules.at(j, i) = bit;
    }
  }
  return grid;
}

BarcodeGrid generate_random(int n, uint64_t seed) {
  const int capacity = payload_capacity(n);
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> payload(static_cast<size_t>(capacity));
  for (auto& bit : payload) bit = static_cast<uint8_t>(rng() & 1u);
  return generate(n, payload);
}

Vec2 DisplayImage::module_center_mm(int i, int j) const {
  const double left = center_x_px - barcode_px / 2.0;
  const double top = center_y_px - barcode_px / 2.0;
  const double u = left + 0.5 * (block_edges[j] + block_edges[j + 1]);
  const double v = top + 0.5 * (block_edges[i] + block_edges[i + 1]);
  return {(u - center_x_px) * pixel_pitch_mm, (center_y_px - v) * pixel_pitch_mm};
}

DisplayImage render_to_display(const BarcodeGrid& grid, const DisplaySpec& disp, double side_mm) {
  disp.validate();
  if (grid.n < 3 || grid.modules.width != grid.n || grid.modules.height != grid.n)
    throw std::invalid_argument("render_to_display: malformed grid");
  if (side_mm <= 0) throw std::invalid_argument("render_to_display: side_mm must be > 0");

  const int s = static_cast<int>(std::llround(side_mm / disp.pixel_pitch_mm));
  if (s > disp.width || s > disp.height)
    throw std::invalid_argument("render_to_display: barcode larger than the display panel");
  if (s < grid.n)
    throw std::invalid_argument("render_to_display: fewer display pixels than modules");

  DisplayImage img;
  img.pixel_pitch_mm = disp.pixel_pitch_mm;
  img.fill_factor = disp.fill_factor;
  img.aperture_half = 0.5 * std::sqrt(disp.fill_factor);
  img.barcode_px = s;
  img.n = grid.n;
  const int x0 = (disp.width - s) / 2;
  const int y0 = (disp.height - s) / 2;
  img.center_x_px = x0 + s / 2.0;
  img.center_y_px = y0 + s / 2.0;

  img.block_edges.resize(static_cast<size_t>(grid.n) + 1);
  for (int k = 0; k <= grid.n; ++k)
    img.block_edges[k] = static_cast<int>(std::llround(static_cast<double>(k) * s / grid.n));

  const float lit = static_cast<float>(disp.brightness_duty);
  img.emission = ImageF(disp.width, disp.height, lit);
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      const float value = grid.module(i, j) ? 0.0f : lit;
      for (int v = y0 + img.block_edges[i]; v < y0 + img.block_edges[i + 1]; ++v)
        for (int u = x0 + img.block_edges[j]; u < x0 + img.block_edges[j + 1]; ++u)
          img.emission.at(u, v) = value;
    }
  }
  return img;
}

int read_module(const DisplayImage& img, int i, int j) {
  const int x0 = static_cast<int>(img.center_x_px - img.barcode_px / 2.0);
  const int y0 = static_cast<int>(img.center_y_px - img.barcode_px / 2.0);
  const int u = x0 + (img.block_edges[j] + img.block_edges[j + 1]) / 2;
  const int v = y0 + (img.block_edges[i] + img.block_edges[i + 1]) / 2;
  return img.emission.at(u, v) > 0.0f ? 0 : 1;
}

}  // namespace dccal
