#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roverkf/metrics.hpp"
#include "roverkf/stream.hpp"

namespace roverkf {

/// Files making up one recorded or simulated session. `meta` (JSON) holds the
/// rates, origin, seed and initial state.
struct DatasetBundle {
  std::filesystem::path imu;
  std::filesystem::path odom;
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> slip_labels;
  std::filesystem::path meta;
};

/// Standard layout under `dir`: imu.csv, odom.csv, truth.csv, slip.csv, meta.json.
DatasetBundle bundle_in(const std::filesystem::path& dir);

/// Writes the stream to `dir` (created if needed) and returns the bundle.
DatasetBundle write_dataset(const SensorStream& stream, const std::filesystem::path& dir);

/// Reads and validates a bundle. Malformed rows raise ParseError with the
/// line number; non-monotone time raises StreamError naming the line.
SensorStream read_dataset(const DatasetBundle& bundle);
SensorStream read_dataset(const std::filesystem::path& dir);

/// Shortest text form that parses back to the identical double.
std::string format_double(double x);

/// Per-epoch error CSV: `t,norm,up`.
void write_error_csv(const ErrorSeries& errors, const std::filesystem::path& file);

}  // namespace roverkf
