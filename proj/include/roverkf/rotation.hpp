#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace roverkf {

/// Cross-product matrix: skew(a)·b = a × b.
Eigen::Matrix3d skew(const Eigen::Vector3d& a);

/// Rotation matrix of the rotation vector `phi` (Rodrigues).
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);

/// Rotation vector of `r`; inverse of so3_exp for angles below π.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& r);

/// Right Jacobian of SO(3): Exp(φ + δ) ≈ Exp(φ)·Exp(J_r(φ)·δ).
Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& phi);

Eigen::Quaterniond quat_exp(const Eigen::Vector3d& phi);

/// Z-Y-X Euler angles (roll, pitch, yaw) of a body-to-navigation rotation,
/// C = Rz(yaw)·Ry(pitch)·Rx(roll).
struct Euler {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

Euler euler_from_matrix(const Eigen::Matrix3d& c);
Eigen::Matrix3d matrix_from_euler(const Euler& e);

}  // namespace roverkf
