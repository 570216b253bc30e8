#include "roverkf/rotation.hpp"

#include <algorithm>
#include <cmath>

namespace roverkf {

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d s;
  s << 0.0, -a.z(), a.y(),  //
      a.z(), 0.0, -a.x(),   //
      -a.y(), a.x(), 0.0;
  return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  if (angle < 1e-8) {
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  Eigen::Vector3d v = aa.axis() * aa.angle();
  if (!v.allFinite()) v.setZero();
  return v;
}

Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  if (angle < 1e-6) {
    return Eigen::Matrix3d::Identity() - 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double a2 = angle * angle;
  return Eigen::Matrix3d::Identity() - (1.0 - std::cos(angle)) / a2 * k +
         (angle - std::sin(angle)) / (a2 * angle) * k * k;
}

Eigen::Quaterniond quat_exp(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  if (angle < 1e-12) {
    Eigen::Quaterniond q(1.0, 0.5 * phi.x(), 0.5 * phi.y(), 0.5 * phi.z());
    return q.normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, phi / angle));
}

Euler euler_from_matrix(const Eigen::Matrix3d& c) {
  Euler e;
  e.roll = std::atan2(c(2, 1), c(2, 2));
  e.pitch = -std::asin(std::clamp(c(2, 0), -1.0, 1.0));
  e.yaw = std::atan2(c(1, 0), c(0, 0));
  return e;
}

Eigen::Matrix3d matrix_from_euler(const Euler& e) {
  return (Eigen::AngleAxisd(e.yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(e.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(e.roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace roverkf
