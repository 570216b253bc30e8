#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "roverkf/earth.hpp"

namespace roverkf {

struct Enu {
  double e = 0.0;
  double n = 0.0;
  double u = 0.0;
};

/// Curvilinear local-tangent projection about `origin`:
///   e = Δlon·(R_E + h₀)·cos lat₀,  n = Δlat·(R_N + h₀),  u = Δh.
Enu to_enu(const Geodetic& pos, const Geodetic& origin);
Geodetic from_enu(const Enu& enu, const Geodetic& origin);

struct EnuTrajectory {
  std::vector<double> times;
  std::vector<double> east;
  std::vector<double> north;
  std::vector<double> up;
  Geodetic origin;

  std::size_t size() const { return times.size(); }
  void push_back(double t, const Enu& p);
};

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> norm;  // 3-D position error, m
  std::vector<double> up;    // signed vertical error, m
};

/// Errors of `estimate` against `truth` linearly interpolated to the
/// estimate timestamps. Estimate epochs outside the truth span are dropped;
/// no overlap at all throws EvaluationError.
ErrorSeries error_series(const EnuTrajectory& estimate, const EnuTrajectory& truth);

struct Quartiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear interpolation between closest ranks (Hyndman-Fan type 7).
Quartiles quartiles(std::span<const double> values);
double rms(std::span<const double> values);

struct ErrorSummary {
  double rms = 0.0;       // of the norm series
  double max_norm = 0.0;
  Quartiles norm;
  Quartiles up;
  std::size_t count = 0;
};

ErrorSummary summarize(const ErrorSeries& errors);

}  // namespace roverkf
