#include "dccal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dccal {

BerPlot assemble_ber(const std::vector<DecodedFrame>& decoded, const BarcodeGrid& truth) {
  if (decoded.empty()) throw std::invalid_argument("assemble_ber: no frames");
  const int n = truth.n;
  BerPlot plot;
  plot.n = n;
  plot.frames = static_cast<int>(decoded.size());
  plot.counts.assign(static_cast<size_t>(n) * n, 0);
  for (const auto& frame : decoded) {
    if (frame.undecodable) {
      for (auto& c : plot.counts) ++c;
      continue;
    }
    if (frame.bits.width != n || frame.bits.height != n)
      throw std::invalid_argument("assemble_ber: frame dimension mismatch");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (frame.bits.at(j, i) != truth.module(i, j))
          ++plot.counts[static_cast<size_t>(i) * n + j];
  }
  return plot;
}

double confidence_interval(double p, int n_i) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("confidence_interval: p outside [0,1]");
  if (n_i < 1) throw std::invalid_argument("confidence_interval: N_I must be >= 1");
  return 2.0 * std::sqrt(p * (1.0 - p)) / std::sqrt(static_cast<double>(n_i));
}

int ErrorRegion::count() const {
  int c = 0;
  for (uint8_t v : mask) c += v != 0;
  return c;
}

ErrorRegion error_prone_region(const BerPlot& ber, int top_m, double frac, int dilation,
                               PeakRule rule) {
  if (top_m < 1) throw std::invalid_argument("error_prone_region: top_m must be >= 1");
  if (frac <= 0.0 || frac > 1.0)
    throw std::invalid_argument("error_prone_region: frac must be in (0,1]");
  if (dilation < 0) throw std::invalid_argument("error_prone_region: dilation must be >= 0");

  const int n = ber.n;
  const size_t cells = static_cast<size_t>(n) * n;
  std::vector<double> rates(cells);
  for (size_t k = 0; k < cells; ++k)
    rates[k] = static_cast<double>(ber.counts[k]) / ber.frames;

  // Mean of the top_m largest rates, zero-padded below top_m modules.
  std::vector<double> sorted = rates;
  const size_t take = std::min<size_t>(static_cast<size_t>(top_m), cells);
  std::partial_sort(sorted.begin(), sorted.begin() + take, sorted.end(),
                    std::greater<double>());
  double peak_sum = 0.0;
  for (size_t k = 0; k < take; ++k) peak_sum += sorted[k];
  const double threshold = frac * peak_sum / top_m;

  ErrorRegion region;
  region.n = n;
  region.threshold = threshold;
  region.dilation = dilation;
  region.mask.assign(cells, 0);

  const auto rate_at = [&](int i, int j) { return rates[static_cast<size_t>(i) * n + j]; };
  std::deque<std::pair<int, int>> frontier;
  std::vector<int> dist(cells, -1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (rate_at(i, j) <= threshold) continue;
      if (rule == PeakRule::kLocalMaxima) {
        bool dominated = false;
        for (int di = -1; di <= 1 && !dominated; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int ni = i + di, nj = j + dj;
            if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
            if (rate_at(ni, nj) > rate_at(i, j)) {
              dominated = true;
              break;
            }
          }
        if (dominated) continue;
      }
      dist[static_cast<size_t>(i) * n + j] = 0;
      frontier.emplace_back(i, j);
    }
  }

  // Multi-source BFS on the 4-neighborhood walks out exactly L1 distance.
  while (!frontier.empty()) {
    const auto [i, j] = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<size_t>(i) * n + j];
    region.mask[static_cast<size_t>(i) * n + j] = 1;
    if (d == dilation) continue;
    constexpr int kSteps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& s : kSteps) {
      const int ni = i + s[0], nj = j + s[1];
      if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
      auto& nd = dist[static_cast<size_t>(ni) * n + nj];
      if (nd == -1) {
        nd = d + 1;
        frontier.emplace_back(ni, nj);
      }
    }
  }
  return region;
}

ConsistencyReport consistency(const ErrorRegion& r1, const ErrorRegion& r2) {
  if (r1.n != r2.n) throw std::invalid_argument("consistency: grid dimension mismatch");
  ConsistencyReport report;
  for (size_t k = 0; k < r1.mask.size(); ++k) {
    const bool in1 = r1.mask[k] != 0;
    const bool in2 = r2.mask[k] != 0;
    report.e_c += in1 && in2;
    report.e_a += in1 || in2;
  }
  report.r = report.e_a > 0 ? static_cast<double>(report.e_c) / report.e_a : 1.0;
  return report;
}

ImageU8 render_heatmap(const BerPlot& ber) {
  ImageU8 img(ber.n, ber.n);
  for (int i = 0; i < ber.n; ++i)
    for (int j = 0; j < ber.n; ++j) {
      const double scaled = std::min(ber.rate(i, j) / 0.5, 1.0);
      img.at(j, i) = static_cast<uint8_t>(std::lround(scaled * 255.0));
    }
  return img;
}

void write_ber_csv(const std::filesystem::path& path, const BerPlot& ber) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out << ber.n << "," << ber.frames << "\n";
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(ber.fingerprint));
  out << "# fingerprint=" << hex << "\n";
  for (int i = 0; i < ber.n; ++i) {
    for (int j = 0; j < ber.n; ++j)
      out << ber.counts[static_cast<size_t>(i) * ber.n + j] << (j + 1 == ber.n ? "\n" : ",");
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

BerPlot read_ber_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ber csv: empty file");
  BerPlot plot;
  {
    std::istringstream header(line);
    char comma = 0;
    if (!(header >> plot.n >> comma >> plot.frames) || comma != ',' || plot.n < 1 ||
        plot.frames < 1)
      throw std::runtime_error("ber csv: malformed header");
  }
  plot.counts.reserve(static_cast<size_t>(plot.n) * plot.n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("fingerprint=");
      if (pos != std::string::npos)
        plot.fingerprint = std::stoull(line.substr(pos + 12), nullptr, 16);
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      const long v = std::stol(cell);
      if (v < 0 || v > plot.frames) throw std::runtime_error("ber csv: count out of range");
      plot.counts.push_back(static_cast<uint32_t>(v));
    }
  }
  if (plot.counts.size() != static_cast<size_t>(plot.n) * plot.n)
    throw std::runtime_error("ber csv: wrong cell count");
  return plot;
}

}  // namespace dccal
