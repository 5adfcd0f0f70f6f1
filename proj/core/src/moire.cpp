#include "dccal/moire.hpp"

#include <cmath>
#include <stdexcept>

namespace dccal {

double moire_free_distance(double focal_mm, double sensor_pitch_um,
                           double display_pitch_mm, int k) {
  if (k < 1) throw std::invalid_argument("moire_free_distance: k must be >= 1");
  if (focal_mm <= 0 || sensor_pitch_um <= 0 || display_pitch_mm <= 0)
    throw std::invalid_argument("moire_free_distance: physical constants must be > 0");
  const double ts_mm = sensor_pitch_um * 1e-3;
  const double ratio = static_cast<double>(k) * ts_mm / display_pitch_mm;
  return 2.0 * focal_mm * (ratio + 0.25 / ratio + 1.0);
}

MoireDistanceTable moire_free_table(const std::vector<NamedDevicePair>& devices, int k_max) {
  if (k_max < 1) throw std::invalid_argument("moire_free_table: k_max must be >= 1");
  MoireDistanceTable table;
  table.k_max = k_max;
  table.rows.reserve(devices.size());
  for (const auto& dev : devices) {
    MoireDistanceTable::Row row;
    row.device_pair = dev.name;
    row.distances_m.reserve(static_cast<size_t>(k_max));
    for (int k = 1; k <= k_max; ++k)
      row.distances_m.push_back(
          1e-3 * moire_free_distance(dev.cam.focal_length_mm, dev.cam.pixel_pitch_um,
                                     dev.disp.pixel_pitch_mm, k));
    table.rows.push_back(std::move(row));
  }
  return table;
}

NearestDistance nearest_moire_free_distance(double target_mm, double focal_mm,
                                            double sensor_pitch_um, double display_pitch_mm,
                                            int k_max) {
  if (k_max < 1) throw std::invalid_argument("nearest_moire_free_distance: k_max must be >= 1");
  NearestDistance best{1, moire_free_distance(focal_mm, sensor_pitch_um, display_pitch_mm, 1)};
  double best_err = std::abs(best.distance_mm - target_mm);
  for (int k = 2; k <= k_max; ++k) {
    double d = moire_free_distance(focal_mm, sensor_pitch_um, display_pitch_mm, k);
    double err = std::abs(d - target_mm);
    if (err < best_err) {  // strict: ties keep the smaller k
      best_err = err;
      best = {k, d};
    }
  }
  return best;
}

}  // namespace dccal
