#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dccal/geometry.hpp"

namespace dccal {

// Distances at which the beat between the display pixel grid and the sensor
// photosite grid vanishes (projected display pitch lands on an even multiple
// of the sensor pitch), so the captured frame carries no coarse bands.
struct MoireDistanceTable {
  struct Row {
    std::string device_pair;          // "<camera>+<display>"
    std::vector<double> distances_m;  // indexed by k-1, k = 1..k_max
  };
  int k_max = 0;
  std::vector<Row> rows;
};

struct NamedDevicePair {
  std::string name;
  CameraSpec cam;
  DisplaySpec disp;
};

// k-th band-free distance in mm: 2f(k*Ts/Td + Td/(4k*Ts) + 1).
// Throws std::invalid_argument for k < 1 or non-positive constants.
double moire_free_distance(double focal_mm, double sensor_pitch_um,
                           double display_pitch_mm, int k);

// Distances for k = 1..k_max per device pair, in meters.
MoireDistanceTable moire_free_table(const std::vector<NamedDevicePair>& devices, int k_max);

struct NearestDistance {
  int k;
  double distance_mm;
};

// k in [1, k_max] minimizing |d_k - target|; ties pick the smaller k.
NearestDistance nearest_moire_free_distance(double target_mm, double focal_mm,
                                            double sensor_pitch_um, double display_pitch_mm,
                                            int k_max);

}  // namespace dccal
