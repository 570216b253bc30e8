#include "roverkf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "roverkf/errors.hpp"

namespace roverkf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kImuHeader = "t,fx,fy,fz,wx,wy,wz";
constexpr std::string_view kOdomHeader = "t,v_lon,psi_dot";
constexpr std::string_view kTruthHeader = "t,lat,lon,h,ve,vn,vu";
constexpr std::string_view kSlipHeader = "t,slip,active";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Rows of a headed CSV file, each with exactly `header`'s column count.
class CsvReader {
 public:
  CsvReader(const fs::path& file, std::string_view header) : name_(file.string()), in_(file) {
    if (!in_) throw StreamError("cannot open " + name_);
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(name_, 1, "missing header row");
    ++line_no_;
    std::string_view h = trim(line);
    if (h.size() >= 3 && h.substr(0, 3) == "\xEF\xBB\xBF") h.remove_prefix(3);
    std::string compact;
    for (char c : h) {
      if (c != ' ' && c != '\t') compact += c;
    }
    if (compact != header) {
      throw ParseError(name_, 1, "expected header '" + std::string(header) + "'");
    }
    columns_ = 1 + static_cast<std::size_t>(std::count(header.begin(), header.end(), ','));
  }

  /// Next data row; false at end of file. Blank lines are skipped.
  bool next(std::vector<double>& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const std::string_view text = trim(line);
      if (text.empty()) continue;
      row.clear();
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = text.find(',', start);
        const std::string_view field =
            trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        row.push_back(parse(field));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (row.size() != columns_) {
        fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(row.size()));
      }
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_no_; }
  const std::string& name() const { return name_; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(name_, line_no_, what); }

  /// Rejects timestamps that do not strictly increase.
  void check_time(double t, double& previous, bool& first) const {
    if (!first && !(t > previous)) {
      throw StreamError(name_ + ":" + std::to_string(line_no_) + ": timestamp " + format_double(t) +
                        " does not increase past " + format_double(previous));
    }
    previous = t;
    first = false;
  }

 private:
  double parse(std::string_view field) const {
    if (field.empty()) fail("empty field");
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail("malformed number '" + std::string(field) + "'");
    }
    if (!std::isfinite(value)) fail("non-finite value '" + std::string(field) + "'");
    return value;
  }

  std::string name_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t columns_ = 0;
};

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw StreamError("cannot write " + file.string());
  return out;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
  out << '\n';
}

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json geodetic(const Geodetic& g) { return json{{"lat", g.lat}, {"lon", g.lon}, {"h", g.height}}; }

Eigen::Vector3d read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("meta: '" + what + "' must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Geodetic read_geodetic(const json& j) {
  return Geodetic{j.at("lat").get<double>(), j.at("lon").get<double>(), j.at("h").get<double>()};
}

fs::path resolve(const fs::path& base, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void validate_stream(const SensorStream& stream) {
  if (!(stream.imu_rate > 0.0) || !(stream.odo_rate > 0.0)) throw ConfigError("sample rates must be positive");
  for (std::size_t i = 1; i < stream.imu.size(); ++i) {
    if (!(stream.imu[i].time > stream.imu[i - 1].time)) {
      throw StreamError("imu sample " + std::to_string(i) + ": timestamp does not increase");
    }
  }
  for (std::size_t i = 1; i < stream.odom.size(); ++i) {
    if (!(stream.odom[i].time > stream.odom[i - 1].time)) {
      throw StreamError("odometry sample " + std::to_string(i) + ": timestamp does not increase");
    }
  }
  if (stream.truth) {
    const auto& t = *stream.truth;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i].time > t[i - 1].time)) {
        throw StreamError("truth record " + std::to_string(i) + ": timestamp does not increase");
      }
    }
  }
}

DatasetBundle bundle_in(const fs::path& dir) {
  return DatasetBundle{dir / "imu.csv", dir / "odom.csv", dir / "truth.csv", dir / "slip.csv", dir / "meta.json"};
}

DatasetBundle write_dataset(const SensorStream& stream, const fs::path& dir) {
  validate_stream(stream);
  fs::create_directories(dir);
  DatasetBundle bundle = bundle_in(dir);
  if (!stream.truth) bundle.truth.reset();
  if (stream.slip_labels.empty()) bundle.slip_labels.reset();

  {
    auto out = open_out(bundle.imu);
    out << kImuHeader << '\n';
    for (const ImuSample& s : stream.imu) {
      write_row(out, {s.time, s.specific_force.x(), s.specific_force.y(), s.specific_force.z(), s.angular_rate.x(),
                      s.angular_rate.y(), s.angular_rate.z()});
    }
  }
  {
    auto out = open_out(bundle.odom);
    out << kOdomHeader << '\n';
    for (const WheelOdomSample& s : stream.odom) write_row(out, {s.time, s.rear_wheel_speed, s.heading_rate});
  }
  if (bundle.truth) {
    auto out = open_out(*bundle.truth);
    out << kTruthHeader << '\n';
    for (const TruthRecord& r : *stream.truth) {
      write_row(out, {r.time, r.position.lat, r.position.lon, r.position.height, r.velocity.x(), r.velocity.y(),
                      r.velocity.z()});
    }
  }
  if (bundle.slip_labels) {
    auto out = open_out(*bundle.slip_labels);
    out << kSlipHeader << '\n';
    for (const SlipLabel& l : stream.slip_labels) write_row(out, {l.time, l.slip, l.active ? 1.0 : 0.0});
  }

  const NavState& n = stream.initial;
  json meta;
  meta["format"] = "roverkf-dataset";
  meta["version"] = 1;
  meta["imu_rate"] = stream.imu_rate;
  meta["odo_rate"] = stream.odo_rate;
  meta["seed"] = stream.seed;
  meta["origin"] = geodetic(stream.origin);
  meta["initial"] = json{
      {"time", n.time},
      {"attitude_wxyz", json::array({n.attitude.w(), n.attitude.x(), n.attitude.y(), n.attitude.z()})},
      {"velocity", vec3(n.velocity)},
      {"position", geodetic(n.position)},
      {"accel_bias", vec3(n.accel_bias)},
      {"gyro_bias", vec3(n.gyro_bias)},
      {"angular_rate", vec3(n.angular_rate)},
  };
  meta["files"] = json{
      {"imu", bundle.imu.filename().string()},
      {"odom", bundle.odom.filename().string()},
      {"truth", bundle.truth ? json(bundle.truth->filename().string()) : json(nullptr)},
      {"slip_labels", bundle.slip_labels ? json(bundle.slip_labels->filename().string()) : json(nullptr)},
  };
  auto out = open_out(bundle.meta);
  out << meta.dump(2) << '\n';
  return bundle;
}

SensorStream read_dataset(const fs::path& dir) {
  const fs::path meta_file = dir / "meta.json";
  std::ifstream in(meta_file);
  if (!in) throw StreamError("cannot open " + meta_file.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(meta_file.string(), 0, e.what());
  }
  DatasetBundle bundle = bundle_in(dir);
  bundle.truth.reset();
  bundle.slip_labels.reset();
  if (meta.contains("files")) {
    const json& files = meta["files"];
    if (files.contains("imu")) bundle.imu = resolve(dir, files["imu"].get<std::string>());
    if (files.contains("odom")) bundle.odom = resolve(dir, files["odom"].get<std::string>());
    if (files.contains("truth") && files["truth"].is_string()) {
      bundle.truth = resolve(dir, files["truth"].get<std::string>());
    }
    if (files.contains("slip_labels") && files["slip_labels"].is_string()) {
      bundle.slip_labels = resolve(dir, files["slip_labels"].get<std::string>());
    }
  } else if (fs::exists(dir / "truth.csv")) {
    bundle.truth = dir / "truth.csv";
  }
  return read_dataset(bundle);
}

SensorStream read_dataset(const DatasetBundle& bundle) {
  SensorStream s;
  {
    std::ifstream in(bundle.meta);
    if (!in) throw StreamError("cannot open " + bundle.meta.string());
    try {
      const json meta = json::parse(in);
      s.imu_rate = meta.at("imu_rate").get<double>();
      s.odo_rate = meta.at("odo_rate").get<double>();
      s.seed = meta.value("seed", std::uint64_t{0});
      s.origin = read_geodetic(meta.at("origin"));
      if (meta.contains("initial")) {
        const json& init = meta["initial"];
        s.initial.time = init.value("time", 0.0);
        if (init.contains("attitude_wxyz")) {
          const json& q = init["attitude_wxyz"];
          s.initial.attitude = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                                  q.at(2).get<double>(), q.at(3).get<double>());
        }
        if (init.contains("velocity")) s.initial.velocity = read_vec3(init["velocity"], "velocity");
        s.initial.position = init.contains("position") ? read_geodetic(init["position"]) : s.origin;
        if (init.contains("accel_bias")) s.initial.accel_bias = read_vec3(init["accel_bias"], "accel_bias");
        if (init.contains("gyro_bias")) s.initial.gyro_bias = read_vec3(init["gyro_bias"], "gyro_bias");
        if (init.contains("angular_rate")) s.initial.angular_rate = read_vec3(init["angular_rate"], "angular_rate");
      } else {
        s.initial.position = s.origin;
      }
    } catch (const json::parse_error& e) {
      throw ParseError(bundle.meta.string(), 0, e.what());
    } catch (const json::exception& e) {
      throw ConfigError(bundle.meta.string() + ": " + e.what());
    }
  }
  if (!(s.imu_rate > 0.0) || !(s.odo_rate > 0.0)) throw ConfigError("dataset rates must be positive");

  std::vector<double> row;
  {
    CsvReader csv(bundle.imu, kImuHeader);
    double prev = 0.0;
    bool first = true;
    while (csv.next(row)) {
      csv.check_time(row[0], prev, first);
      s.imu.push_back(ImuSample{row[0], {row[1], row[2], row[3]}, {row[4], row[5], row[6]}});
    }
  }
  {
    CsvReader csv(bundle.odom, kOdomHeader);
    double prev = 0.0;
    bool first = true;
    while (csv.next(row)) {
      csv.check_time(row[0], prev, first);
      s.odom.push_back(WheelOdomSample{row[0], row[1], row[2]});
    }
  }
  if (bundle.truth) {
    CsvReader csv(*bundle.truth, kTruthHeader);
    std::vector<TruthRecord> truth;
    double prev = 0.0;
    bool first = true;
    while (csv.next(row)) {
      csv.check_time(row[0], prev, first);
      truth.push_back(TruthRecord{row[0], Geodetic{row[1], row[2], row[3]}, {row[4], row[5], row[6]}});
    }
    s.truth = std::move(truth);
  }
  if (bundle.slip_labels) {
    CsvReader csv(*bundle.slip_labels, kSlipHeader);
    double prev = 0.0;
    bool first = true;
    while (csv.next(row)) {
      csv.check_time(row[0], prev, first);
      if (row[2] != 0.0 && row[2] != 1.0) csv.fail("'active' must be 0 or 1");
      s.slip_labels.push_back(SlipLabel{row[0], row[1], row[2] == 1.0});
    }
  }
  return s;
}

void write_error_csv(const ErrorSeries& errors, const fs::path& file) {
  auto out = open_out(file);
  out << "t,norm,up\n";
  for (std::size_t i = 0; i < errors.times.size(); ++i) write_row(out, {errors.times[i], errors.norm[i], errors.up[i]});
}

}  // namespace roverkf
