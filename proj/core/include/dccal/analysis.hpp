#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dccal/barcode.hpp"
#include "dccal/decoder.hpp"
#include "dccal/image.hpp"

namespace dccal {

// Per-module error counts over N_I frames. Rates are exact rationals
// count/frames; no floating accumulation anywhere.
struct BerPlot {
  int n = 0;
  int frames = 0;                // N_I
  std::vector<uint32_t> counts;  // n*n row-major error counts
  uint64_t fingerprint = 0;      // config hash carried through artifacts

  double rate(int i, int j) const {
    return static_cast<double>(counts[static_cast<size_t>(i) * n + j]) / frames;
  }
};

// Undecodable frames count every module as an error, keeping the
// denominator fixed at the frame count.
BerPlot assemble_ber(const std::vector<DecodedFrame>& decoded, const BarcodeGrid& truth);

// Half-width of the 95% band: 2 sqrt(p(1-p)) / sqrt(N_I).
double confidence_interval(double p, int n_i);

enum class PeakRule {
  kTopValues,   // peaks are all modules above the threshold
  kLocalMaxima  // peaks must also dominate their 8 neighbors
};

struct ErrorRegion {
  int n = 0;
  std::vector<uint8_t> mask;  // n*n, 1 = inside the region
  double threshold = 0.0;
  int dilation = 0;

  bool at(int i, int j) const { return mask[static_cast<size_t>(i) * n + j] != 0; }
  int count() const;
};

// threshold = frac * mean of the top_m largest rates (zero-padded when the
// grid has fewer modules); peaks are strictly above it; the mask dilates
// each peak by L1 distance <= dilation, clipped to the grid.
ErrorRegion error_prone_region(const BerPlot& ber, int top_m = 10, double frac = 0.5,
                               int dilation = 3, PeakRule rule = PeakRule::kTopValues);

struct ConsistencyReport {
  int e_c = 0;  // modules in both regions
  int e_a = 0;  // modules in either region
  double r = 1.0;
};

// R = E_c / E_a; two empty regions are maximally consistent (R = 1).
ConsistencyReport consistency(const ErrorRegion& r1, const ErrorRegion& r2);

// n x n grayscale: rate 0 -> 0, rate >= 0.5 -> 255, linear between.
ImageU8 render_heatmap(const BerPlot& ber);

// Exact round-trip text format: "n,N_I" header, a "# fingerprint=<hex>"
// comment, then n rows of n integer error counts.
void write_ber_csv(const std::filesystem::path& path, const BerPlot& ber);
BerPlot read_ber_csv(const std::filesystem::path& path);

}  // namespace dccal
