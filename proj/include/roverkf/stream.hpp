#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "roverkf/nav_model.hpp"

namespace roverkf {

/// Reference position and ENU velocity at one instant.
struct TruthRecord {
  double time = 0.0;
  Geodetic position;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/// Injected odometry error at one odometry epoch (simulated data only).
struct SlipLabel {
  double time = 0.0;
  double slip = 0.0;  // m/s added to the longitudinal speed
  bool active = false;
};

/// Everything a filter session consumes, in time order.
struct SensorStream {
  std::vector<ImuSample> imu;
  std::vector<WheelOdomSample> odom;
  std::optional<std::vector<TruthRecord>> truth;
  std::vector<SlipLabel> slip_labels;
  NavState initial;
  Geodetic origin;
  double imu_rate = 50.0;
  double odo_rate = 10.0;
  std::uint64_t seed = 0;
};

/// Checks per-stream monotone timestamps; throws StreamError naming the
/// first offending index.
void validate_stream(const SensorStream& stream);

}  // namespace roverkf
