#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dccal {

/// Row-major single-channel raster. Row 0 is the top of the image.
template <typename T>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  T* row(int y) { return data.data() + static_cast<size_t>(y) * width; }
  const T* row(int y) const { return data.data() + static_cast<size_t>(y) * width; }
  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool operator==(const Plane&) const = default;
};

using ImageU8 = Plane<uint8_t>;
using ImageF = Plane<float>;
/// 0/1 per pixel; 1 means dark (below threshold) in decoder context.
using BitImage = Plane<uint8_t>;

/// Bilinear sample in continuous pixel coordinates where (i+0.5, j+0.5) is
/// the center of pixel (i, j). Coordinates are clamped to the image.
double bilinear(const Plane<uint8_t>& img, double x, double y);
double bilinear(const Plane<float>& img, double x, double y);

void write_pgm(const std::filesystem::path& path, const ImageU8& img);
ImageU8 read_pgm(const std::filesystem::path& path);

/// P1 (ascii) or P4 (packed) portable bitmap; 1 = dark.
void write_pbm(const std::filesystem::path& path, const BitImage& img, bool binary_p4 = false);
BitImage read_pbm(const std::filesystem::path& path);

}  // namespace dccal
