#include "roverkf/nav_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "roverkf/errors.hpp"
#include "roverkf/rotation.hpp"

namespace roverkf {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

void validate_step(const ImuSample& imu, double dt) {
  if (!(dt > 0.0) || dt > 0.1 || !std::isfinite(dt)) {
    throw StreamError("IMU step dt=" + std::to_string(dt) + " s outside (0, 0.1] at t=" +
                      std::to_string(imu.time));
  }
  if (!imu.specific_force.allFinite() || !imu.angular_rate.allFinite()) {
    throw StreamError("non-finite IMU sample at t=" + std::to_string(imu.time));
  }
}

/// Rate matrix mapping ENU velocity onto (lat, lon, h) rates.
Matrix3d position_rate_matrix(const Geodetic& p) {
  const double rn = meridian_radius(p.lat) + p.height;
  const double re = transverse_radius(p.lat) + p.height;
  Matrix3d t = Matrix3d::Zero();
  t(0, 1) = 1.0 / rn;
  t(1, 0) = 1.0 / (re * std::cos(p.lat));
  t(2, 2) = 1.0;
  return t;
}

Vector3d body_rate(const NavState& nav, const ImuSample& imu, const MechanizationOptions& opts) {
  Vector3d w = imu.angular_rate - nav.gyro_bias;
  if (opts.earth_rate) {
    const Vector3d w_in = earth_rate_enu(nav.position.lat) + transport_rate_enu(nav.position, nav.velocity);
    w -= nav.dcm().transpose() * w_in;
  }
  return w;
}

}  // namespace

ErrorStateBelief make_error_state_belief(const Mat& cov) {
  check_square(cov, kErrorStates, "error-state covariance");
  return ErrorStateBelief{Vec::Zero(kErrorStates), symmetrize(cov)};
}

NavState strapdown_propagate(const NavState& nav, const ImuSample& imu, double dt,
                             const MechanizationOptions& opts) {
  validate_step(imu, dt);
  const Vector3d phi = body_rate(nav, imu, opts) * dt;

  NavState out = nav;
  out.attitude = (nav.attitude * quat_exp(phi)).normalized();
  const Eigen::Quaterniond mid = nav.attitude * quat_exp(0.5 * phi);

  Vector3d accel = mid * (imu.specific_force - nav.accel_bias);
  accel.z() -= gravity_magnitude(nav.position.lat, nav.position.height);
  if (opts.earth_rate) {
    const Vector3d w = 2.0 * earth_rate_enu(nav.position.lat) + transport_rate_enu(nav.position, nav.velocity);
    accel -= w.cross(nav.velocity);
  }
  out.velocity = nav.velocity + accel * dt;

  const Vector3d dp = position_rate_matrix(nav.position) * (0.5 * (nav.velocity + out.velocity) * dt);
  out.position.lat = nav.position.lat + dp.x();
  out.position.lon = wrap_pi(nav.position.lon + dp.y());
  out.position.height = nav.position.height + dp.z();

  out.angular_rate = imu.angular_rate;
  out.time = nav.time + dt;
  return out;
}

Mat error_state_transition(const NavState& nav, const ImuSample& imu, double dt,
                           const MechanizationOptions& opts) {
  validate_step(imu, dt);
  const Vector3d phi = body_rate(nav, imu, opts) * dt;
  const Matrix3d c = nav.dcm();
  const Matrix3d c_next = c * so3_exp(phi);
  const Matrix3d c_mid = c * so3_exp(0.5 * phi);
  const Vector3d a_body = imu.specific_force - nav.accel_bias;
  const Vector3d a_nav = c_mid * a_body;
  const Geodetic& p = nav.position;

  Mat f = Mat::Identity(kErrorStates, kErrorStates);
  // attitude
  f.block<3, 3>(es::kAtt, es::kGyroBias) = -c_next * so3_right_jacobian(phi) * dt;

  // velocity after the step, per error component
  Mat dv_next = Mat::Zero(3, kErrorStates);
  dv_next.block<3, 3>(0, es::kAtt) = -skew(a_nav) * dt;
  dv_next.block<3, 3>(0, es::kVel) = Matrix3d::Identity();
  dv_next.block<3, 3>(0, es::kAccelBias) = -c_mid * dt;
  dv_next.block<3, 3>(0, es::kGyroBias) = c_mid * skew(a_body) * so3_right_jacobian(0.5 * phi) * (0.5 * dt * dt);
  const Eigen::Vector2d dg = gravity_gradient(p.lat, p.height);
  dv_next(2, es::kPos + 0) = -dg.x() * dt;
  dv_next(2, es::kPos + 2) = -dg.y() * dt;
  f.block(es::kVel, 0, 3, kErrorStates) = dv_next;

  // position: p' = p + T(p)·(v + v')·dt/2
  const Vector3d v_next = nav.velocity + (a_nav - Vector3d(0, 0, gravity_magnitude(p.lat, p.height))) * dt;
  const Vector3d v_sum = nav.velocity + v_next;
  Mat dv_sum = dv_next;
  dv_sum.block<3, 3>(0, es::kVel) += Matrix3d::Identity();
  const Matrix3d t = position_rate_matrix(p);
  Mat dp_next = 0.5 * dt * t * dv_sum;

  const double rn = meridian_radius(p.lat) + p.height;
  const double re = transverse_radius(p.lat) + p.height;
  const double cl = std::cos(p.lat);
  const double sl = std::sin(p.lat);
  // ∂T/∂(lat, h)·v_sum
  Matrix3d dt_dp = Matrix3d::Zero();
  dt_dp(0, 0) = -v_sum.y() * meridian_radius_dlat(p.lat) / (rn * rn);
  dt_dp(0, 2) = -v_sum.y() / (rn * rn);
  dt_dp(1, 0) = v_sum.x() * (re * sl - transverse_radius_dlat(p.lat) * cl) / (re * re * cl * cl);
  dt_dp(1, 2) = -v_sum.x() / (re * re * cl);
  dp_next.block<3, 3>(0, es::kPos) += Matrix3d::Identity() + 0.5 * dt * dt_dp;
  f.block(es::kPos, 0, 3, kErrorStates) = dp_next;
  return f;
}

Mat error_state_process_noise(const ImuNoise& noise, double dt) {
  Mat q = Mat::Zero(kErrorStates, kErrorStates);
  const auto set = [&](Eigen::Index at, double psd) {
    q.block<3, 3>(at, at) = Matrix3d::Identity() * psd * psd * dt;
  };
  set(es::kAtt, noise.gyro_noise_psd);
  set(es::kVel, noise.accel_noise_psd);
  set(es::kAccelBias, noise.accel_bias_psd);
  set(es::kGyroBias, noise.gyro_bias_psd);
  return q;
}

PredictResult error_state_predict(const ErrorStateBelief& belief, const NavState& nav, const ImuSample& imu,
                                  double dt, const ImuNoise& noise, const MechanizationOptions& opts) {
  const Mat f = error_state_transition(nav, imu, dt, opts);
  PredictResult out;
  out.belief = kf_predict(belief, f, error_state_process_noise(noise, dt));
  out.nav = strapdown_propagate(nav, imu, dt, opts);
  return out;
}

NavState inject_error(const NavState& nav, const Vec& delta) {
  check_size(delta, kErrorStates, "error-state vector");
  NavState out = nav;
  out.attitude = (quat_exp(delta.segment<3>(es::kAtt)) * nav.attitude).normalized();
  out.velocity += delta.segment<3>(es::kVel);
  out.position.lat += delta(es::kPos + 0);
  out.position.lon = wrap_pi(out.position.lon + delta(es::kPos + 1));
  out.position.height += delta(es::kPos + 2);
  out.accel_bias += delta.segment<3>(es::kAccelBias);
  out.gyro_bias += delta.segment<3>(es::kGyroBias);
  return out;
}

Vec error_between(const NavState& perturbed, const NavState& nominal) {
  Vec d(kErrorStates);
  d.segment<3>(es::kAtt) = so3_log(perturbed.dcm() * nominal.dcm().transpose());
  d.segment<3>(es::kVel) = perturbed.velocity - nominal.velocity;
  d(es::kPos + 0) = perturbed.position.lat - nominal.position.lat;
  d(es::kPos + 1) = wrap_pi(perturbed.position.lon - nominal.position.lon);
  d(es::kPos + 2) = perturbed.position.height - nominal.position.height;
  d.segment<3>(es::kAccelBias) = perturbed.accel_bias - nominal.accel_bias;
  d.segment<3>(es::kGyroBias) = perturbed.gyro_bias - nominal.gyro_bias;
  return d;
}

Eigen::Vector4d odometry_prediction(const NavState& nav) {
  const Matrix3d c = nav.dcm();
  const Vector3d v_body = c.transpose() * nav.velocity;
  const Euler e = euler_from_matrix(c);
  const Vector3d w = nav.angular_rate - nav.gyro_bias;
  // ψ̇ = (ω_y sin φ + ω_z cos φ) / cos θ, so ψ̇·cos θ needs no division.
  const double yaw_rate_body = w.y() * std::sin(e.roll) + w.z() * std::cos(e.roll);
  return {v_body.x(), v_body.y(), v_body.z(), yaw_rate_body};
}

Eigen::Matrix4d default_odometry_noise() {
  return Eigen::Vector4d(0.05 * 0.05, 0.02 * 0.02, 0.02 * 0.02, 0.01 * 0.01).asDiagonal();
}

OdomInnovation build_odometry_innovation(const NavState& nav, const WheelOdomSample& odo,
                                         const Eigen::Matrix4d& r_nominal) {
  const Eigen::Vector4d pred = odometry_prediction(nav);
  OdomInnovation out;
  out.dz << odo.rear_wheel_speed - pred(0), -pred(1), -pred(2), odo.heading_rate - pred(3);
  out.r = r_nominal;

  const Matrix3d c = nav.dcm();
  out.h.block<3, 3>(0, es::kAtt) = c.transpose() * skew(nav.velocity);
  out.h.block<3, 3>(0, es::kVel) = c.transpose();

  const Euler e = euler_from_matrix(c);
  const Vector3d w = nav.angular_rate - nav.gyro_bias;
  const double sr = std::sin(e.roll);
  const double cr = std::cos(e.roll);
  // roll sensitivity to a navigation-frame attitude error
  const double den = c(2, 1) * c(2, 1) + c(2, 2) * c(2, 2);
  Eigen::RowVector3d droll = Eigen::RowVector3d::Zero();
  if (den > 0.0) {
    droll(0) = (c(2, 2) * c(1, 1) - c(2, 1) * c(1, 2)) / den;
    droll(1) = (c(2, 1) * c(0, 2) - c(2, 2) * c(0, 1)) / den;
  }
  out.h.block<1, 3>(3, es::kAtt) = (w.y() * cr - w.z() * sr) * droll;
  out.h.block<1, 3>(3, es::kGyroBias) = Eigen::RowVector3d(0.0, -sr, -cr);
  return out;
}

bool detect_zero_velocity(std::span<const WheelOdomSample> window, const ZuptConfig& cfg) {
  if (cfg.window < 1 || window.size() < static_cast<std::size_t>(cfg.window)) return false;
  for (const auto& s : window.last(static_cast<std::size_t>(cfg.window))) {
    if (!(std::abs(s.rear_wheel_speed) < cfg.speed_threshold)) return false;
    if (!(std::abs(s.heading_rate) < cfg.rate_threshold)) return false;
  }
  return true;
}

CorrectionOutcome apply_zupt(const ErrorStateBelief& belief, const NavState& nav, const ZuptConfig& cfg) {
  if (!(cfg.noise > 0.0)) throw ConfigError("zupt: noise must be positive");
  Mat h = Mat::Zero(3, kErrorStates);
  h.block<3, 3>(0, es::kVel) = Matrix3d::Identity();
  const Vec z = -nav.velocity;
  const Mat r = Matrix3d::Identity() * cfg.noise;
  const GaussianBelief post = kf_update(belief, z, h, r).belief;
  return {ErrorStateBelief{Vec::Zero(kErrorStates), post.cov}, inject_error(nav, post.mean)};
}

Method method_of(const RobustUpdateConfig& cfg) { return static_cast<Method>(cfg.index()); }

std::string_view method_name(Method m) {
  switch (m) {
    case Method::None:
      return "none";
    case Method::Hkf:
      return "hkf";
    case Method::Cskf:
      return "cskf";
    case Method::Orkf1:
      return "orkf1";
    case Method::Orkf2:
      return "orkf2";
    case Method::Orkf3:
      return "orkf3";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::None, Method::Hkf, Method::Cskf, Method::Orkf1, Method::Orkf2, Method::Orkf3}) {
    if (name == method_name(m)) return m;
  }
  if (name == "corenav" || name == "standard") return Method::None;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

CorrectionResult apply_correction(const ErrorStateBelief& belief, const NavState& nav,
                                  const OdomInnovation& innovation, const RobustUpdateConfig& robust,
                                  const std::optional<Orkf3State>& orkf3_state) {
  const Vec z = innovation.dz;
  const Mat& h = innovation.h;
  const Mat r = innovation.r;
  const double nominal_trace = r.trace();

  CorrectionResult out;
  CorrectionDiagnostics& diag = out.diagnostics;
  diag.method = method_of(robust);
  {
    const Mat s = symmetrize(h * belief.cov * h.transpose() + r);
    const Vec e = z - h * belief.mean;
    diag.mahalanobis_sq = e.dot(spd_solve(s, e, "innovation covariance").col(0));
  }

  GaussianBelief post = std::visit(
      Overloaded{
          [&](const StandardUpdate&) {
            diag.noise_trace = nominal_trace;
            return kf_update(belief, z, h, r).belief;
          },
          [&](const HuberConfig& cfg) {
            HkfResult res = hkf_update(belief, z, h, r, cfg);
            const Vec wm = res.weights.tail(z.size());
            const Mat lr = cholesky_lower(r, "measurement noise");
            diag.noise_trace = (lr * wm.cwiseInverse().asDiagonal() * lr.transpose()).trace();
            diag.min_weight = wm.minCoeff();
            diag.iterations = res.iterations;
            diag.converged = res.converged;
            diag.gated = diag.min_weight < 1.0;
            return res.belief;
          },
          [&](const CskfConfig& cfg) {
            CskfResult res = cskf_update(belief, z, h, r, cfg);
            diag.gamma = res.gamma;
            diag.gated = res.inflated;
            diag.noise_trace = res.noise_used.trace();
            return res.belief;
          },
          [&](const Orkf1Config& cfg) {
            Orkf1Result res = orkf1_update(belief, z, h, r, cfg);
            diag.noise_trace = res.noise_estimate.trace();
            diag.iterations = res.iterations;
            diag.gated = diag.noise_trace > nominal_trace;
            return res.belief;
          },
          [&](const Orkf2Config& cfg) {
            Orkf2Result res = orkf2_update(belief, z, h, r, cfg);
            diag.lambda_mean = res.lambda_mean;
            diag.noise_trace = res.noise_used.trace();
            diag.iterations = res.iterations;
            diag.gated = diag.noise_trace > nominal_trace;
            return res.belief;
          },
          [&](const Orkf3Config& cfg) {
            const Orkf3State seed = orkf3_state ? *orkf3_state : Orkf3State::from_nominal(r, cfg.u);
            Orkf3Result res = orkf3_update(belief, z, h, r, seed, cfg);
            diag.noise_trace = res.noise_estimate.trace();
            diag.iterations = res.iterations;
            diag.state_reset = res.reset;
            diag.gated = diag.noise_trace > nominal_trace;
            out.orkf3_state = res.state;
            return res.belief;
          },
      },
      robust);

  out.nav = inject_error(nav, post.mean);
  out.belief = ErrorStateBelief{Vec::Zero(kErrorStates), post.cov};
  return out;
}

}  // namespace roverkf
