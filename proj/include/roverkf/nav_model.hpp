#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "roverkf/earth.hpp"
#include "roverkf/kf_core.hpp"
#include "roverkf/robust_updates.hpp"
#include "roverkf/variational.hpp"

namespace roverkf {

// Frames: navigation = local East-North-Up; body = Forward-Left-Up.

inline constexpr Eigen::Index kErrorStates = 15;

/// Error-state layout: [δΦ (rad), δv (m/s), δp (lat rad, lon rad, h m), b_a, b_g].
namespace es {
inline constexpr Eigen::Index kAtt = 0;
inline constexpr Eigen::Index kVel = 3;
inline constexpr Eigen::Index kPos = 6;
inline constexpr Eigen::Index kAccelBias = 9;
inline constexpr Eigen::Index kGyroBias = 12;
}  // namespace es

struct NavState {
  Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();  // body → navigation
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();            // ENU, m/s
  Geodetic position;
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();  // m/s²
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();   // rad/s
  /// Raw gyro reading that drove the most recent propagation step.
  Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();
  double time = 0.0;

  Eigen::Matrix3d dcm() const { return attitude.toRotationMatrix(); }
};

struct ImuSample {
  double time = 0.0;
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero();  // body, m/s²
  Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();    // body, rad/s
};

struct WheelOdomSample {
  double time = 0.0;
  double rear_wheel_speed = 0.0;  // m/s, longitudinal
  double heading_rate = 0.0;      // rad/s
};

/// IMU noise densities used to build the process noise.
struct ImuNoise {
  double accel_noise_psd = 2e-3;   // (m/s²)/√Hz
  double gyro_noise_psd = 1e-4;    // (rad/s)/√Hz
  double accel_bias_psd = 1e-4;    // (m/s²)·√Hz bias random walk
  double gyro_bias_psd = 2e-6;     // (rad/s)·√Hz bias random walk
};

struct MechanizationOptions {
  /// Earth rotation and transport-rate terms. The error-state Jacobian omits
  /// their (small) couplings either way.
  bool earth_rate = false;
};

using ErrorStateBelief = GaussianBelief;

/// Zero error mean with the given 15×15 covariance.
ErrorStateBelief make_error_state_belief(const Mat& cov);

/// One strapdown step. Attitude integrates the bias-corrected gyro through
/// the exponential map; velocity uses the mid-interval attitude; position is
/// trapezoidal in (lat, lon, h).
NavState strapdown_propagate(const NavState& nav, const ImuSample& imu, double dt,
                             const MechanizationOptions& opts = {});

/// Discrete error-state transition of strapdown_propagate at `nav`.
Mat error_state_transition(const NavState& nav, const ImuSample& imu, double dt,
                           const MechanizationOptions& opts = {});
Mat error_state_process_noise(const ImuNoise& noise, double dt);

struct PredictResult {
  ErrorStateBelief belief;
  NavState nav;
};

PredictResult error_state_predict(const ErrorStateBelief& belief, const NavState& nav, const ImuSample& imu,
                                  double dt, const ImuNoise& noise, const MechanizationOptions& opts = {});

/// Applies an error-state vector: C ← Exp(δΦ)·C, additive elsewhere.
NavState inject_error(const NavState& nav, const Vec& delta);
/// Error-state vector taking `nominal` to `perturbed`; inverse of inject_error.
Vec error_between(const NavState& perturbed, const NavState& nominal);

/// Body-frame velocity (x, y, z) and the pitch-compensated body yaw rate
/// ψ̇·cos θ predicted by the INS.
Eigen::Vector4d odometry_prediction(const NavState& nav);

struct OdomInnovation {
  Eigen::Vector4d dz = Eigen::Vector4d::Zero();  // [v_lon,O − v_lon,i; −v_lat,i; −v_ver,i; ψ̇_O − ψ̇_i·cos θ]
  Mat h = Mat::Zero(4, kErrorStates);
  Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
};

/// diag(0.05², 0.02², 0.02², 0.01²).
Eigen::Matrix4d default_odometry_noise();

OdomInnovation build_odometry_innovation(const NavState& nav, const WheelOdomSample& odo,
                                         const Eigen::Matrix4d& r_nominal);

struct ZuptConfig {
  bool enabled = true;
  double speed_threshold = 0.01;  // m/s
  double rate_threshold = 0.005;  // rad/s
  int window = 5;                 // odometry samples
  double noise = 1e-4;            // (m/s)² per velocity axis
};

/// True iff the last `cfg.window` samples all satisfy |v| < v_th and |ψ̇| < ω_th.
bool detect_zero_velocity(std::span<const WheelOdomSample> window, const ZuptConfig& cfg);

struct CorrectionOutcome {
  ErrorStateBelief belief;
  NavState nav;
};

/// Zero-velocity pseudo-measurement on all three velocity axes.
CorrectionOutcome apply_zupt(const ErrorStateBelief& belief, const NavState& nav, const ZuptConfig& cfg);

struct StandardUpdate {};

using RobustUpdateConfig =
    std::variant<StandardUpdate, HuberConfig, CskfConfig, Orkf1Config, Orkf2Config, Orkf3Config>;

enum class Method { None, Hkf, Cskf, Orkf1, Orkf2, Orkf3 };

Method method_of(const RobustUpdateConfig& cfg);
std::string_view method_name(Method m);
/// Accepts the lower-case names printed by method_name. Throws ConfigError.
Method parse_method(std::string_view name);

struct CorrectionDiagnostics {
  Method method = Method::None;
  double noise_trace = 0.0;      // trace of the effective measurement covariance
  double gamma = 0.0;            // CSKF scale factor
  double mahalanobis_sq = 0.0;   // innovation M²
  double lambda_mean = 1.0;      // ORKF2 E[λ]
  double min_weight = 1.0;       // smallest HKF measurement-row weight
  int iterations = 0;
  bool converged = true;
  bool gated = false;            // this epoch's measurement was de-weighted
  bool state_reset = false;      // ORKF3 carried factor was re-seeded
};

struct CorrectionResult {
  ErrorStateBelief belief;
  NavState nav;
  CorrectionDiagnostics diagnostics;
  std::optional<Orkf3State> orkf3_state;
};

/// Runs the selected update on the odometry innovation, folds the error
/// estimate into `nav` and resets the error mean to zero. ORKF3 consumes
/// and returns its carried noise factor (seeded from nominal when absent).
CorrectionResult apply_correction(const ErrorStateBelief& belief, const NavState& nav,
                                  const OdomInnovation& innovation, const RobustUpdateConfig& robust,
                                  const std::optional<Orkf3State>& orkf3_state = std::nullopt);

}  // namespace roverkf
