#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dccal/geometry.hpp"
#include "dccal/image.hpp"

namespace dccal {

// n x n module matrix, 1 = dark. Fixed layout:
//   left column and bottom row solid dark (finder L);
//   top row alternates starting dark at column 0;
//   right column alternates starting dark at row 0;
//   interior (n-2)^2 modules hold the payload bits row-major.
// All four corner modules come out dark under these phases.
struct BarcodeGrid {
  int n = 0;
  BitImage modules;              // width = columns, height = rows
  std::vector<uint8_t> payload;  // (n-2)^2 bits

  int module(int row, int col) const { return modules.at(col, row); }
};

// (n-2)^2. Throws std::invalid_argument unless n is odd and >= 3.
int payload_capacity(int n);

BarcodeGrid generate(int n, const std::vector<uint8_t>& payload);
// Payload bits drawn from the low bit of a seeded mt19937_64 stream.
BarcodeGrid generate_random(int n, uint64_t seed);

// Time-averaged emission map over the full display panel, one value per
// display pixel in [0,1]. The emissive aperture covers the central
// fill_factor fraction of each pixel cell (sqrt(fill_factor) per axis);
// the surrounding gap emits nothing. The barcode block is centered on the
// panel and its center defines the display-plane mm origin (y up).
struct DisplayImage {
  ImageF emission;
  double pixel_pitch_mm = 0.0;
  double fill_factor = 1.0;
  double aperture_half = 0.5;  // 0.5 * sqrt(fill_factor)
  double center_x_px = 0.0;    // continuous panel coords of the barcode center
  double center_y_px = 0.0;
  int barcode_px = 0;            // S: barcode side in display pixels
  int n = 0;
  std::vector<int> block_edges;  // n+1 module block edges, 0 .. S

  double barcode_side_mm() const { return barcode_px * pixel_pitch_mm; }

  // Emission at a display-plane point; 0 outside the panel or in a gap.
  double sample_mm(double x_mm, double y_mm) const {
    const double u = center_x_px + x_mm / pixel_pitch_mm;
    const double v = center_y_px - y_mm / pixel_pitch_mm;
    if (u < 0.0 || v < 0.0 || u >= emission.width || v >= emission.height) return 0.0;
    const int ix = static_cast<int>(u);
    const int iy = static_cast<int>(v);
    if (std::abs(u - ix - 0.5) > aperture_half || std::abs(v - iy - 0.5) > aperture_half)
      return 0.0;
    return emission.at(ix, iy);
  }

  // mm position of the center of module (row i, col j).
  Vec2 module_center_mm(int i, int j) const;
};

// Maps each module to a rounded block of display pixels. Light modules and
// the rest of the panel emit brightness_duty; dark modules emit 0.
// Throws std::invalid_argument when the barcode does not fit the panel.
DisplayImage render_to_display(const BarcodeGrid& grid, const DisplaySpec& disp, double side_mm);

// Module value read back from the central display pixel of block (i, j);
// grid-level inverse of render_to_display. 1 = dark.
int read_module(const DisplayImage& img, int i, int j);

}  // namespace dccal
