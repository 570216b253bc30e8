#include "roverkf/earth.hpp"

#include <cmath>

namespace roverkf {

namespace {

constexpr double kGravityEquator = 9.7803253359;
constexpr double kSomiglianaK = 0.00193185265241;

double mass_ratio() {
  const double b = wgs84::kSemiMajor * (1.0 - wgs84::kFlattening);
  return wgs84::kEarthRate * wgs84::kEarthRate * wgs84::kSemiMajor * wgs84::kSemiMajor * b /
         wgs84::kGm;
}

}  // namespace

double meridian_radius(double lat) {
  const double s = std::sin(lat);
  const double w = 1.0 - wgs84::kEccSq * s * s;
  return wgs84::kSemiMajor * (1.0 - wgs84::kEccSq) / std::pow(w, 1.5);
}

double transverse_radius(double lat) {
  const double s = std::sin(lat);
  return wgs84::kSemiMajor / std::sqrt(1.0 - wgs84::kEccSq * s * s);
}

double meridian_radius_dlat(double lat) {
  const double s = std::sin(lat);
  const double c = std::cos(lat);
  const double w = 1.0 - wgs84::kEccSq * s * s;
  return 3.0 * wgs84::kSemiMajor * (1.0 - wgs84::kEccSq) * wgs84::kEccSq * s * c /
         std::pow(w, 2.5);
}

double transverse_radius_dlat(double lat) {
  const double s = std::sin(lat);
  const double c = std::cos(lat);
  const double w = 1.0 - wgs84::kEccSq * s * s;
  return wgs84::kSemiMajor * wgs84::kEccSq * s * c / std::pow(w, 1.5);
}

double gravity_magnitude(double lat, double height) {
  const double s = std::sin(lat);
  const double w = 1.0 - wgs84::kEccSq * s * s;
  const double g0 = kGravityEquator * (1.0 + kSomiglianaK * s * s) / std::sqrt(w);
  const double a = wgs84::kSemiMajor;
  const double f = wgs84::kFlattening;
  const double scale =
      1.0 - 2.0 / a * (1.0 + f + mass_ratio() - 2.0 * f * s * s) * height + 3.0 * height * height / (a * a);
  return g0 * scale;
}

Eigen::Vector2d gravity_gradient(double lat, double height) {
  const double s = std::sin(lat);
  const double c = std::cos(lat);
  const double w = 1.0 - wgs84::kEccSq * s * s;
  const double e2 = wgs84::kEccSq;
  const double k = kSomiglianaK;
  const double a = wgs84::kSemiMajor;
  const double f = wgs84::kFlattening;
  const double m = mass_ratio();

  const double g0 = kGravityEquator * (1.0 + k * s * s) / std::sqrt(w);
  const double dg0 = kGravityEquator * s * c * (2.0 * k * w + (1.0 + k * s * s) * e2) / std::pow(w, 1.5);
  const double scale = 1.0 - 2.0 / a * (1.0 + f + m - 2.0 * f * s * s) * height + 3.0 * height * height / (a * a);
  const double dscale_dlat = 8.0 * f * s * c * height / a;
  const double dscale_dh = -2.0 / a * (1.0 + f + m - 2.0 * f * s * s) + 6.0 * height / (a * a);
  return {dg0 * scale + g0 * dscale_dlat, g0 * dscale_dh};
}

Eigen::Vector3d earth_rate_enu(double lat) {
  return {0.0, wgs84::kEarthRate * std::cos(lat), wgs84::kEarthRate * std::sin(lat)};
}

Eigen::Vector3d transport_rate_enu(const Geodetic& pos, const Eigen::Vector3d& v) {
  const double rn = meridian_radius(pos.lat) + pos.height;
  const double re = transverse_radius(pos.lat) + pos.height;
  return {-v.y() / rn, v.x() / re, v.x() * std::tan(pos.lat) / re};
}

}  // namespace roverkf
