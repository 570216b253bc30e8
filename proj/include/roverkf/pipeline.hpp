#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roverkf/config.hpp"
#include "roverkf/metrics.hpp"
#include "roverkf/stream.hpp"

namespace roverkf {

/// One processed odometry epoch.
struct EpochDiagnostics {
  std::size_t index = 0;  // position in the odometry stream
  double time = 0.0;
  bool zupt = false;
  Eigen::Vector4d innovation = Eigen::Vector4d::Zero();  // zero on ZUPT epochs
  CorrectionDiagnostics correction;
};

struct FilterRun {
  std::vector<NavState> trajectory;  // initial state, then one per IMU sample
  std::vector<EpochDiagnostics> epochs;
  ErrorStateBelief final_belief;
  std::size_t n_gated = 0;
  std::size_t n_zupt = 0;
  std::size_t dropped_odometry = 0;  // samples after the last IMU sample
};

/// Called after every propagation and correction with the current estimate.
using FilterObserver = std::function<void(const NavState&, const ErrorStateBelief&)>;

/// Propagates through every IMU sample and corrects at each odometry sample,
/// IMU first on equal timestamps. ZUPT replaces the odometry update when the
/// stationarity window fires. Module errors are rethrown with the epoch index.
FilterRun run_filter(const SensorStream& stream, const RunConfig& config, const FilterObserver& observer = {});

EnuTrajectory enu_trajectory(std::span<const NavState> states, const Geodetic& origin);
EnuTrajectory enu_trajectory(std::span<const TruthRecord> truth, const Geodetic& origin);

/// Largest 3-D distance between two runs over their common epochs.
double max_separation(const FilterRun& a, const FilterRun& b);

struct MethodReport {
  std::string label;
  Method method = Method::None;
  KeyValues params;
  KeyValues config;
  std::optional<ErrorSummary> summary;  // absent without truth
  ErrorSeries errors;
  std::size_t n_epochs = 0;
  std::size_t n_gated = 0;
  std::size_t n_zupt = 0;
  std::optional<double> runtime_s;
  int rank = 0;  // 1 = lowest RMS; 0 when unranked
};

struct ComparisonReport {
  std::vector<MethodReport> rows;
  bool has_truth = false;
  KeyValues scenario;  // dataset metadata echoed into the report
};

struct CompareOptions {
  bool timing = false;    // record wall-clock runtime (breaks byte-identical reports)
  bool parallel = true;
};

/// Runs every config on the stream and ranks them by RMS position error.
/// Without truth the report holds diagnostics only.
ComparisonReport compare(const SensorStream& stream, const std::vector<RunConfig>& configs,
                         const CompareOptions& options = {});

/// `base` with `key` set to each of `values` in turn.
std::vector<RunConfig> sweep_configs(const RunConfig& base, const std::string& key,
                                     const std::vector<std::string>& values);

std::string report_json(const ComparisonReport& report);
std::string report_table(const ComparisonReport& report);

}  // namespace roverkf
