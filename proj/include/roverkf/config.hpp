#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roverkf/nav_model.hpp"
#include "roverkf/sim.hpp"

namespace roverkf {

/// Ordered `key=value` settings as read from a config file or the command line.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// One `key=value` per line; `#` starts a comment; blank lines ignored.
/// Malformed lines raise ParseError naming `source` and the line.
KeyValues parse_key_values(std::string_view text, const std::string& source);
KeyValues read_key_value_file(const std::filesystem::path& file);
/// Parses a single `key=value` token (command-line override).
std::pair<std::string, std::string> parse_assignment(std::string_view token);

/// 1σ of the initial error state.
struct InitialUncertainty {
  double tilt_sigma = 0.005;        // roll/pitch, rad
  double heading_sigma = 0.01;      // rad
  double velocity_sigma = 0.05;     // m/s
  double position_sigma = 0.1;      // horizontal, m
  double height_sigma = 0.1;        // m
  double accel_bias_sigma = 0.01;   // m/s²
  double gyro_bias_sigma = 1e-4;    // rad/s
};

/// Diagonal initial covariance, with horizontal metres converted to radians at `at`.
Mat initial_covariance(const InitialUncertainty& init, const Geodetic& at);

struct RunConfig {
  Method method = Method::None;
  HuberConfig hkf;
  CskfConfig cskf;
  Orkf1Config orkf1;
  Orkf2Config orkf2;
  Orkf3Config orkf3;
  Eigen::Vector4d odom_r_diag = default_odometry_noise().diagonal();
  ZuptConfig zupt;
  InitialUncertainty init;
  ImuNoise imu;
  MechanizationOptions mechanization;

  RobustUpdateConfig robust() const;
  Eigen::Matrix4d odom_noise() const { return odom_r_diag.asDiagonal(); }
};

/// Sets one filter key. Unknown keys and malformed values raise ConfigError.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
/// Throws ConfigError when a parameter violates its method's preconditions.
void validate_config(const RunConfig& cfg);
/// Defaults overlaid with `settings` in order, then validated. Keys under
/// `sim.` are left to make_simulation.
RunConfig make_config(const KeyValues& settings);

/// Every resolved filter key, in a fixed order.
KeyValues config_echo(const RunConfig& cfg);
/// Parameters of the selected method only.
KeyValues method_params(const RunConfig& cfg);

/// Simulation scenario from the `sim.` keys; other keys are ignored.
///   sim.scenario, sim.seed, sim.imu_rate, sim.odo_rate,
///   sim.origin.lat_deg, sim.origin.lon_deg, sim.origin.h,
///   sim.slip.probability, sim.slip.magnitude_sigma, sim.slip.burst_length, sim.slip.seed,
///   sim.noise.{accel_psd, gyro_psd, odom_speed_sigma, odom_rate_sigma, accel_bias, gyro_bias}
struct ScenarioConfig {
  std::string scenario = "field";
  SimulationSpec spec;
};

ScenarioConfig make_simulation(const KeyValues& settings);
KeyValues simulation_echo(const ScenarioConfig& cfg);

}  // namespace roverkf
