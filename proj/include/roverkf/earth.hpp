#pragma once

#include <Eigen/Dense>

namespace roverkf {

/// WGS-84 constants.
namespace wgs84 {
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccSq = kFlattening * (2.0 - kFlattening);
inline constexpr double kEarthRate = 7.292115e-5;
inline constexpr double kGm = 3.986004418e14;
}  // namespace wgs84

/// Geodetic position: latitude and longitude in radians, height in metres.
struct Geodetic {
  double lat = 0.0;
  double lon = 0.0;
  double height = 0.0;
};

/// Meridian (north-south) radius of curvature.
double meridian_radius(double lat);
/// Transverse (east-west) radius of curvature.
double transverse_radius(double lat);
double meridian_radius_dlat(double lat);
double transverse_radius_dlat(double lat);

/// Normal gravity magnitude (Somigliana with free-air height correction), m/s².
double gravity_magnitude(double lat, double height);
/// Partial derivatives of gravity_magnitude w.r.t. latitude and height.
Eigen::Vector2d gravity_gradient(double lat, double height);

/// Earth rotation vector resolved in the ENU frame.
Eigen::Vector3d earth_rate_enu(double lat);
/// Transport rate of the ENU frame for ENU velocity `v`.
Eigen::Vector3d transport_rate_enu(const Geodetic& pos, const Eigen::Vector3d& v);

}  // namespace roverkf
