#include "roverkf/sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "roverkf/errors.hpp"
#include "roverkf/metrics.hpp"
#include "roverkf/rotation.hpp"

namespace roverkf {

namespace {

long whole_ratio(double num, double den, const char* what) {
  const double ratio = num / den;
  const double rounded = std::round(ratio);
  if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw ConfigError(std::string(what) + " is not a whole multiple");
  }
  return static_cast<long>(rounded);
}

void validate(const Segment& s, std::size_t index) {
  const std::string where = "segment " + std::to_string(index);
  if (!(s.duration > 0.0)) throw ConfigError(where + ": duration must be positive");
  if (!(s.speed >= 0.0)) throw ConfigError(where + ": speed must be non-negative");
  switch (s.kind) {
    case SegmentKind::Pause:
      if (s.speed != 0.0 || s.turn_rate != 0.0) throw ConfigError(where + ": pause must have zero speed and turn rate");
      break;
    case SegmentKind::Straight:
      if (s.turn_rate != 0.0) throw ConfigError(where + ": straight segment with nonzero turn rate");
      break;
    case SegmentKind::Arc:
      if (s.turn_rate == 0.0) throw ConfigError(where + ": arc needs a nonzero turn rate");
      break;
  }
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Eigen::Vector3d gaussian3(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return Eigen::Vector3d::Zero();
  std::normal_distribution<double> n(0.0, sigma);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {x, y, z};
}

}  // namespace

NoiseSpec NoiseSpec::noiseless() {
  NoiseSpec n;
  n.accel_noise_psd = 0.0;
  n.gyro_noise_psd = 0.0;
  n.accel_bias.setZero();
  n.gyro_bias.setZero();
  n.odom_speed_sigma = 0.0;
  n.odom_rate_sigma = 0.0;
  return n;
}

std::vector<NavState> generate_truth(const TrajectorySpec& spec, double imu_rate, double odo_rate) {
  if (!(imu_rate > 0.0) || !(odo_rate > 0.0)) throw ConfigError("sample rates must be positive");
  whole_ratio(imu_rate, odo_rate, "imu_rate / odo_rate");
  if (spec.segments.empty()) throw ConfigError("trajectory has no segments");

  // Sample index at which each segment starts.
  std::vector<long> starts;
  long total = 0;
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    validate(spec.segments[i], i);
    starts.push_back(total);
    total += whole_ratio(spec.segments[i].duration * imu_rate, 1.0,
                         ("segment " + std::to_string(i) + " duration in IMU periods").c_str());
  }
  const double dt = 1.0 / imu_rate;

  std::size_t seg = 0;
  const auto segment_at = [&](long k) -> const Segment& {
    while (seg + 1 < spec.segments.size() && k >= starts[seg + 1]) ++seg;
    return spec.segments[seg];
  };

  std::vector<NavState> out;
  out.reserve(static_cast<std::size_t>(total + 1));
  double heading = spec.initial_heading;
  Eigen::Vector3d enu = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_velocity = Eigen::Vector3d::Zero();
  double prev_turn = 0.0;
  for (long k = 0; k <= total; ++k) {
    if (k > 0) heading += prev_turn * dt;
    const Segment& s = segment_at(k);
    const Eigen::Vector3d velocity(s.speed * std::cos(heading), s.speed * std::sin(heading), 0.0);
    if (k > 0) enu += 0.5 * (prev_velocity + velocity) * dt;

    NavState n;
    n.time = static_cast<double>(k) * dt;
    n.attitude = Eigen::Quaterniond(Eigen::AngleAxisd(heading, Eigen::Vector3d::UnitZ()));
    n.velocity = velocity;
    n.position = from_enu(Enu{enu.x(), enu.y(), enu.z()}, spec.origin);
    n.angular_rate = Eigen::Vector3d(0.0, 0.0, k > 0 ? prev_turn : s.turn_rate);
    out.push_back(n);

    prev_velocity = velocity;
    prev_turn = s.turn_rate;
  }
  return out;
}

std::vector<ImuSample> synthesize_imu(const std::vector<NavState>& truth, const NoiseSpec& noise,
                                      std::uint64_t seed, const MechanizationOptions& opts) {
  std::vector<ImuSample> out;
  if (truth.size() < 2) return out;
  out.reserve(truth.size() - 1);
  auto rng = make_rng(seed, 1);

  for (std::size_t k = 1; k < truth.size(); ++k) {
    const NavState& a = truth[k - 1];
    const NavState& b = truth[k];
    const double dt = b.time - a.time;
    const Eigen::Matrix3d ca = a.dcm();
    const Eigen::Vector3d phi = so3_log(ca.transpose() * b.dcm());

    Eigen::Vector3d w_ib = phi / dt;
    Eigen::Vector3d accel = (b.velocity - a.velocity) / dt;
    accel.z() += gravity_magnitude(a.position.lat, a.position.height);
    if (opts.earth_rate) {
      w_ib += ca.transpose() * (earth_rate_enu(a.position.lat) + transport_rate_enu(a.position, a.velocity));
      const Eigen::Vector3d w = 2.0 * earth_rate_enu(a.position.lat) + transport_rate_enu(a.position, a.velocity);
      accel += w.cross(a.velocity);
    }
    const Eigen::Matrix3d c_mid = ca * so3_exp(0.5 * phi);

    ImuSample s;
    s.time = b.time;
    s.specific_force = c_mid.transpose() * accel;
    s.angular_rate = w_ib;
    const double root_rate = std::sqrt(1.0 / dt);
    s.specific_force += noise.accel_bias + gaussian3(rng, noise.accel_noise_psd * root_rate);
    s.angular_rate += noise.gyro_bias + gaussian3(rng, noise.gyro_noise_psd * root_rate);
    out.push_back(s);
  }
  return out;
}

OdometrySynthesis synthesize_odometry(const std::vector<NavState>& truth, const NoiseSpec& noise,
                                      const SlipSpec& slip, std::uint64_t seed) {
  if (!(slip.probability_per_epoch >= 0.0 && slip.probability_per_epoch <= 1.0)) {
    throw ConfigError("slip probability must lie in [0, 1]");
  }
  if (!(slip.magnitude_sigma >= 0.0)) throw ConfigError("slip magnitude must be non-negative");
  if (slip.burst_length < 1) throw ConfigError("slip burst length must be at least 1");
  if (!(noise.odom_speed_sigma >= 0.0) || !(noise.odom_rate_sigma >= 0.0)) {
    throw ConfigError("odometry noise sigmas must be non-negative");
  }

  auto noise_rng = make_rng(seed, 2);
  auto slip_rng = make_rng(slip.seed, 3);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  // Separate distributions: normal_distribution caches a variate between calls.
  std::normal_distribution<double> noise_normal(0.0, 1.0);
  std::normal_distribution<double> slip_normal(0.0, 1.0);

  OdometrySynthesis out;
  out.samples.reserve(truth.size());
  out.labels.reserve(truth.size());
  int burst_left = 0;
  double burst_magnitude = 0.0;
  for (const NavState& t : truth) {
    const double speed = (t.dcm().transpose() * t.velocity).x();
    const double rate = t.angular_rate.z();

    WheelOdomSample s;
    s.time = t.time;
    s.rear_wheel_speed = speed;
    s.heading_rate = rate;
    // Encoders do not tick while the rover stands still.
    const bool moving = speed != 0.0 || rate != 0.0;
    const double nv = noise_normal(noise_rng);
    const double nw = noise_normal(noise_rng);
    if (moving) {
      s.rear_wheel_speed += noise.odom_speed_sigma * nv;
      s.heading_rate += noise.odom_rate_sigma * nw;
    }

    if (burst_left == 0 && uniform(slip_rng) < slip.probability_per_epoch) {
      burst_left = slip.burst_length;
      burst_magnitude = slip.magnitude_sigma * (1.0 + 0.5 * std::abs(slip_normal(slip_rng)));
    }
    SlipLabel label;
    label.time = t.time;
    if (burst_left > 0) {
      --burst_left;
      label.active = true;
      label.slip = burst_magnitude;
      s.rear_wheel_speed += burst_magnitude;
    }
    out.samples.push_back(s);
    out.labels.push_back(label);
  }
  return out;
}

std::vector<NavState> decimate_truth(const std::vector<NavState>& truth, double imu_rate, double odo_rate) {
  const auto step = static_cast<std::size_t>(whole_ratio(imu_rate, odo_rate, "imu_rate / odo_rate"));
  std::vector<NavState> out;
  for (std::size_t k = step; k < truth.size(); k += step) out.push_back(truth[k]);
  return out;
}

SensorStream simulate(const SimulationSpec& spec) {
  const std::vector<NavState> truth = generate_truth(spec.trajectory, spec.imu_rate, spec.odo_rate);

  SensorStream out;
  out.imu = synthesize_imu(truth, spec.noise, spec.trajectory.seed, spec.mechanization);
  OdometrySynthesis odo = synthesize_odometry(decimate_truth(truth, spec.imu_rate, spec.odo_rate), spec.noise,
                                              spec.slip, spec.trajectory.seed);
  out.odom = std::move(odo.samples);
  out.slip_labels = std::move(odo.labels);

  std::vector<TruthRecord> records;
  records.reserve(truth.size());
  for (const NavState& t : truth) records.push_back(TruthRecord{t.time, t.position, t.velocity});
  out.truth = std::move(records);

  out.initial = truth.front();
  out.initial.accel_bias.setZero();
  out.initial.gyro_bias.setZero();
  out.origin = spec.trajectory.origin;
  out.imu_rate = spec.imu_rate;
  out.odo_rate = spec.odo_rate;
  out.seed = spec.trajectory.seed;
  return out;
}

TrajectorySpec builtin_trajectory(std::string_view name, const Geodetic& origin, std::uint64_t seed) {
  constexpr double kQuarter = std::numbers::pi / 2.0;
  const auto straight = [](double duration, double speed) {
    return Segment{SegmentKind::Straight, duration, speed, 0.0};
  };
  const auto arc = [](double duration, double speed, double angle) {
    return Segment{SegmentKind::Arc, duration, speed, angle / duration};
  };
  const auto pause = [](double duration) { return Segment{SegmentKind::Pause, duration, 0.0, 0.0}; };

  TrajectorySpec spec;
  spec.origin = origin;
  spec.seed = seed;
  if (name == "square" || name == "field") {
    const int loops = name == "field" ? 2 : 1;
    spec.segments.push_back(pause(10.0));
    for (int l = 0; l < loops; ++l) {
      for (int side = 0; side < 4; ++side) {
        spec.segments.push_back(straight(30.0, 0.8));
        spec.segments.push_back(arc(16.0, 0.8, kQuarter));
      }
      spec.segments.push_back(pause(10.0));
    }
  } else if (name == "straight") {
    spec.segments = {pause(5.0), straight(50.0, 1.0), pause(5.0)};
  } else if (name == "stationary") {
    spec.segments = {pause(120.0)};
  } else if (name == "short") {
    spec.segments = {straight(20.0, 0.8), arc(10.0, 0.8, kQuarter), straight(20.0, 0.8)};
  } else {
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }
  return spec;
}

}  // namespace roverkf
