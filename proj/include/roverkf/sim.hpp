#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "roverkf/stream.hpp"

namespace roverkf {

enum class SegmentKind { Straight, Arc, Pause };

struct Segment {
  SegmentKind kind = SegmentKind::Pause;
  double duration = 0.0;   // s
  double speed = 0.0;      // m/s
  double turn_rate = 0.0;  // rad/s, positive turns left
};

/// Planar route at constant height. Headings are measured counter-clockwise
/// from East.
struct TrajectorySpec {
  std::vector<Segment> segments;
  Geodetic origin;
  double initial_heading = 0.0;
  std::uint64_t seed = 0;  // sensor-noise seed
};

/// Sensor error model. Defaults are representative of an ADIS-16495-class
/// IMU and a 10 Hz quadrature encoder.
struct NoiseSpec {
  double accel_noise_psd = 1.33e-4;  // (m/s²)/√Hz
  double gyro_noise_psd = 3.49e-5;   // (rad/s)/√Hz
  Eigen::Vector3d accel_bias{2e-3, -1.5e-3, 3e-3};
  Eigen::Vector3d gyro_bias{2e-5, -1.5e-5, 1e-5};
  double odom_speed_sigma = 0.05;  // m/s
  double odom_rate_sigma = 0.01;   // rad/s

  static NoiseSpec noiseless();
};

/// Wheel-slip outliers: bursts start with `probability_per_epoch` and add a
/// positive longitudinal speed error magnitude_sigma·(1 + |ξ|/2), ξ ~ N(0,1),
/// for `burst_length` consecutive epochs.
struct SlipSpec {
  double probability_per_epoch = 0.0;
  double magnitude_sigma = 0.0;  // m/s
  int burst_length = 1;
  std::uint64_t seed = 0;
};

/// Samples the route at `imu_rate`. Segment durations must be whole IMU
/// periods and `imu_rate` a whole multiple of `odo_rate`.
std::vector<NavState> generate_truth(const TrajectorySpec& spec, double imu_rate, double odo_rate);

/// Exact inverse of strapdown_propagate over consecutive truth samples, plus
/// constant bias and white noise. One sample per truth interval.
std::vector<ImuSample> synthesize_imu(const std::vector<NavState>& truth, const NoiseSpec& noise,
                                      std::uint64_t seed, const MechanizationOptions& opts = {});

struct OdometrySynthesis {
  std::vector<WheelOdomSample> samples;
  std::vector<SlipLabel> labels;
};

/// Wheel odometry from odometry-rate truth. A stationary rover reads exactly
/// zero apart from slip.
OdometrySynthesis synthesize_odometry(const std::vector<NavState>& truth, const NoiseSpec& noise,
                                      const SlipSpec& slip, std::uint64_t seed);

/// Every (imu_rate/odo_rate)-th sample after the first.
std::vector<NavState> decimate_truth(const std::vector<NavState>& truth, double imu_rate, double odo_rate);

struct SimulationSpec {
  TrajectorySpec trajectory;
  NoiseSpec noise;
  SlipSpec slip;
  double imu_rate = 50.0;
  double odo_rate = 10.0;
  MechanizationOptions mechanization;
};

SensorStream simulate(const SimulationSpec& spec);

/// Named routes: "square" (one loop, ~190 s), "field" (two loops with stops,
/// ~400 s), "straight" (60 s), "stationary" (120 s), "short" (50 s).
TrajectorySpec builtin_trajectory(std::string_view name, const Geodetic& origin, std::uint64_t seed);

}  // namespace roverkf
