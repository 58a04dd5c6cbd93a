#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mnav/common.hpp"
#include "mnav/robot.hpp"
#include "mnav/world.hpp"

namespace mnav {

// Ranges are reported no smaller than this floor so observations stay positive.
inline constexpr double kRangeFloor = 1e-3;

struct Observation {
  std::vector<double> ranges;  // n entries, each in (0, max_range]
};

// One row of a simulated disparity image, values in (0, 1].
struct DisparityRow {
  std::vector<double> values;
  int row_index = 0;
};

// Multiplicative range noise emulating depth prediction error, plus optional
// quantization. Disabled at the defaults.
struct SensorNoiseModel {
  double relative_sigma = 0.0;
  std::optional<int> quantization_levels;
  std::uint64_t seed = 0;
};

// Pinhole camera over a single image row.
struct CameraModel {
  int width = 64;
  int height = 48;
  double hfov = 1.047;      // 60 degrees
  double z_min = 0.2;       // near clip, metres
  double max_range = 3.5;   // far clip, metres
  // When false, pseudo-lidar emits raw inverse disparities instead of metres.
  bool metric_scaling = true;
};

// Bearing of pixel i relative to the camera axis.
inline double pixel_bearing(const CameraModel& cam, int i) {
  const double offset = ((i + 0.5) / cam.width - 0.5) * 2.0 * std::tan(cam.hfov / 2.0);
  return std::atan(offset);
}

// Indices of n beams evenly spaced across a w-pixel row, first and last
// pixel included.
inline std::vector<int> beam_pixel_indices(int w, int n) {
  if (n > w) throw Error("too-many-beams");
  if (n < 2) throw Error("too-many-beams", "need at least 2 beams");
  std::vector<int> idx(n);
  for (int k = 0; k < n; ++k) {
    idx[k] = static_cast<int>(std::llround(static_cast<double>(k) * (w - 1) / (n - 1)));
  }
  return idx;
}

// n raycasts evenly spaced across [heading - fov/2, heading + fov/2],
// endpoints inclusive.
inline Observation lidar_scan(const World& world, const Pose& pose, int n,
                              double fov, double max_range) {
  if (n < 2) throw Error("too-many-beams", "need at least 2 beams");
  Observation obs;
  obs.ranges.resize(n);
  for (int k = 0; k < n; ++k) {
    const double bearing = pose.heading - fov / 2.0 + fov * k / (n - 1);
    const double d = raycast(world, pose.position, bearing, max_range);
    obs.ranges[k] = std::max(d, kRangeFloor);
  }
  return obs;
}

// Disparity D_i = z_min / z_i with z_i the hit distance of pixel i's ray,
// clamped to [z_min, max_range]; D in (0, 1].
inline DisparityRow render_disparity_row(const World& world, const Pose& pose,
                                         const CameraModel& cam) {
  DisparityRow row;
  row.row_index = cam.height / 2;
  row.values.resize(cam.width);
  for (int i = 0; i < cam.width; ++i) {
    const double bearing = pose.heading + pixel_bearing(cam, i);
    double z = raycast(world, pose.position, bearing, cam.max_range);
    z = std::clamp(z, cam.z_min, cam.max_range);
    row.values[i] = cam.z_min / z;
  }
  return row;
}

// Samples n inverse disparities from the row and rescales them to ranges.
// Noise is multiplicative Gaussian from the model's own seed, applied in
// beam order, then quantized to the given number of levels if requested.
inline Observation pseudo_lidar(const DisparityRow& row, int n, const CameraModel& cam,
                                const SensorNoiseModel& noise = {}) {
  const auto idx = beam_pixel_indices(static_cast<int>(row.values.size()), n);
  Rng rng(noise.seed);
  Observation obs;
  obs.ranges.resize(n);
  const double scale = cam.metric_scaling ? cam.z_min : 1.0;
  const double ceiling = cam.metric_scaling ? cam.max_range : cam.max_range / cam.z_min;
  for (int k = 0; k < n; ++k) {
    double r = scale / row.values[idx[k]];
    if (noise.relative_sigma > 0.0) r *= 1.0 + noise.relative_sigma * rng.normal();
    if (noise.quantization_levels) {
      const int levels = *noise.quantization_levels;
      r = std::round(r * levels / ceiling) * (ceiling / levels);
    }
    obs.ranges[k] = std::clamp(r, kRangeFloor, ceiling);
  }
  return obs;
}

}  // namespace mnav
