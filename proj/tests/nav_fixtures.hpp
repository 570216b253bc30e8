#pragma once

#include <numbers>

#include "roverkf/config.hpp"
#include "roverkf/nav_model.hpp"
#include "roverkf/rotation.hpp"
#include "roverkf/sim.hpp"
#include "support.hpp"

namespace roverkf::test {

inline Geodetic test_origin() { return Geodetic{39.6465 * std::numbers::pi / 180.0, -1.3957, 300.0}; }

inline NavState random_nav(Rng& rng) {
  NavState n;
  const Euler e{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-3.0, 3.0)};
  n.attitude = Eigen::Quaterniond(matrix_from_euler(e));
  n.velocity = Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.2, 0.2));
  n.position = Geodetic{rng.uniform(-1.2, 1.2), rng.uniform(-3.0, 3.0), rng.uniform(0.0, 1000.0)};
  n.accel_bias = 0.01 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  n.gyro_bias = 1e-3 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  n.angular_rate = Eigen::Vector3d(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.5, 0.5));
  return n;
}

inline ImuSample random_imu(Rng& rng) {
  ImuSample s;
  s.specific_force = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), 9.8 + rng.uniform(-1, 1));
  s.angular_rate = Eigen::Vector3d(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  return s;
}

/// Simulation with the given slip settings; `clean` also removes all sensor noise.
inline SimulationSpec scenario(const std::string& name, std::uint64_t seed, double slip_probability = 0.0,
                               double slip_sigmas = 10.0, bool noiseless = false) {
  SimulationSpec s;
  s.trajectory = builtin_trajectory(name, test_origin(), seed);
  if (noiseless) s.noise = NoiseSpec::noiseless();
  s.slip.probability_per_epoch = slip_probability;
  s.slip.magnitude_sigma = slip_sigmas * NoiseSpec{}.odom_speed_sigma;
  s.slip.seed = seed + 1000;
  return s;
}

}  // namespace roverkf::test
