#include "dccal/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dccal {

namespace {

template <typename T>
double bilinear_impl(const Plane<T>& img, double x, double y) {
  // Shift so pixel centers sit on the integer lattice.
  double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width - 1));
  double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height - 1));
  int x0 = static_cast<int>(fx);
  int y0 = static_cast<int>(fy);
  int x1 = std::min(x0 + 1, img.width - 1);
  int y1 = std::min(y0 + 1, img.height - 1);
  double ax = fx - x0;
  double ay = fy - y0;
  double top = (1.0 - ax) * img.at(x0, y0) + ax * img.at(x1, y0);
  double bot = (1.0 - ax) * img.at(x0, y1) + ax * img.at(x1, y1);
  return (1.0 - ay) * top + ay * bot;
}

// Skips whitespace and '#' comments in a PNM header.
int next_pnm_int(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) throw std::runtime_error("pnm: truncated header");
  in.unget();
  int v = 0;
  in >> v;
  if (!in) throw std::runtime_error("pnm: malformed header integer");
  return v;
}

}  // namespace

double bilinear(const Plane<uint8_t>& img, double x, double y) { return bilinear_impl(img, x, y); }
double bilinear(const Plane<float>& img, double x, double y) { return bilinear_impl(img, x, y); }

void write_pgm(const std::filesystem::path& path, const ImageU8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ImageU8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("not a P5 pgm: " + path.string());
  int w = next_pnm_int(in);
  int h = next_pnm_int(in);
  int maxv = next_pnm_int(in);
  if (maxv != 255) throw std::runtime_error("unsupported pgm maxval");
  in.get();  // single whitespace after header
  ImageU8 img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!in) throw std::runtime_error("truncated pgm: " + path.string());
  return img;
}

void write_pbm(const std::filesystem::path& path, const BitImage& img, bool binary_p4) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  if (binary_p4) {
    out << "P4\n" << img.width << " " << img.height << "\n";
    int stride = (img.width + 7) / 8;
    std::vector<uint8_t> rowbuf(stride);
    for (int y = 0; y < img.height; ++y) {
      std::fill(rowbuf.begin(), rowbuf.end(), 0);
      for (int x = 0; x < img.width; ++x) {
        if (img.at(x, y)) rowbuf[x / 8] |= static_cast<uint8_t>(0x80 >> (x % 8));
      }
      out.write(reinterpret_cast<const char*>(rowbuf.data()), stride);
    }
  } else {
    out << "P1\n" << img.width << " " << img.height << "\n";
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out << (img.at(x, y) ? '1' : '0');
        out << (x + 1 == img.width ? '\n' : ' ');
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

BitImage read_pbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string magic;
  in >> magic;
  int w = next_pnm_int(in);
  int h = next_pnm_int(in);
  BitImage img(w, h);
  if (magic == "P1") {
    for (auto& v : img.data) {
      int c = in.get();
      while (c != EOF && c != '0' && c != '1') {
        if (c == '#') {
          while (c != EOF && c != '\n') c = in.get();
        }
        c = in.get();
      }
      if (c == EOF) throw std::runtime_error("truncated pbm: " + path.string());
      v = static_cast<uint8_t>(c == '1');
    }
  } else if (magic == "P4") {
    in.get();
    int stride = (w + 7) / 8;
    std::vector<uint8_t> rowbuf(stride);
    for (int y = 0; y < h; ++y) {
      in.read(reinterpret_cast<char*>(rowbuf.data()), stride);
      if (!in) throw std::runtime_error("truncated pbm: " + path.string());
      for (int x = 0; x < w; ++x) {
        img.at(x, y) = static_cast<uint8_t>((rowbuf[x / 8] >> (7 - x % 8)) & 1);
      }
    }
  } else {
    throw std::runtime_error("not a pbm: " + path.string());
  }
  return img;
}

}  // namespace dccal
