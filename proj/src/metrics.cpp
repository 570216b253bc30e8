#include "roverkf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "roverkf/errors.hpp"

namespace roverkf {

namespace {

double wrap_pi(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

struct ProjectionScale {
  double east;   // m per rad of longitude
  double north;  // m per rad of latitude
};

ProjectionScale scale_at(const Geodetic& origin) {
  return {(transverse_radius(origin.lat) + origin.height) * std::cos(origin.lat),
          meridian_radius(origin.lat) + origin.height};
}

}  // namespace

Enu to_enu(const Geodetic& pos, const Geodetic& origin) {
  const ProjectionScale s = scale_at(origin);
  return {wrap_pi(pos.lon - origin.lon) * s.east, (pos.lat - origin.lat) * s.north, pos.height - origin.height};
}

Geodetic from_enu(const Enu& enu, const Geodetic& origin) {
  const ProjectionScale s = scale_at(origin);
  return {origin.lat + enu.n / s.north, wrap_pi(origin.lon + enu.e / s.east), origin.height + enu.u};
}

void EnuTrajectory::push_back(double t, const Enu& p) {
  times.push_back(t);
  east.push_back(p.e);
  north.push_back(p.n);
  up.push_back(p.u);
}

ErrorSeries error_series(const EnuTrajectory& estimate, const EnuTrajectory& truth) {
  if (truth.size() == 0 || estimate.size() == 0) throw EvaluationError("empty trajectory");
  ErrorSeries out;
  std::size_t j = 0;
  const double t_last = truth.times.back();
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double t = estimate.times[i];
    if (t < truth.times.front() || t > t_last) continue;
    while (j + 1 < truth.size() && truth.times[j + 1] < t) ++j;
    double e = truth.east[j];
    double n = truth.north[j];
    double u = truth.up[j];
    if (j + 1 < truth.size() && truth.times[j] < t) {
      const double w = (t - truth.times[j]) / (truth.times[j + 1] - truth.times[j]);
      // This form is exact at both knots, so coincident samples compare exactly.
      e = (1.0 - w) * e + w * truth.east[j + 1];
      n = (1.0 - w) * n + w * truth.north[j + 1];
      u = (1.0 - w) * u + w * truth.up[j + 1];
    }
    const double de = estimate.east[i] - e;
    const double dn = estimate.north[i] - n;
    const double du = estimate.up[i] - u;
    out.times.push_back(t);
    out.norm.push_back(std::sqrt(de * de + dn * dn + du * du));
    out.up.push_back(du);
  }
  if (out.times.empty()) throw EvaluationError("estimate and truth do not overlap in time");
  return out;
}

Quartiles quartiles(std::span<const double> values) {
  if (values.empty()) throw EvaluationError("quartiles of an empty series");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto at = [&](double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {v.front(), at(0.25), at(0.5), at(0.75), v.back()};
}

double rms(std::span<const double> values) {
  if (values.empty()) throw EvaluationError("rms of an empty series");
  const double ss = std::accumulate(values.begin(), values.end(), 0.0,
                                    [](double acc, double x) { return acc + x * x; });
  return std::sqrt(ss / static_cast<double>(values.size()));
}

ErrorSummary summarize(const ErrorSeries& errors) {
  ErrorSummary s;
  s.rms = rms(errors.norm);
  s.norm = quartiles(errors.norm);
  s.up = quartiles(errors.up);
  s.max_norm = s.norm.max;
  s.count = errors.norm.size();
  return s;
}

}  // namespace roverkf
