#include "roverkf/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "roverkf/dataset.hpp"
#include "roverkf/errors.hpp"

namespace roverkf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kOdomDim = 4;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("'" + std::string(key) + "': expected " + expected + ", got '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view value) {
  std::string_view v = trim(value);
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
    bad_value(key, value, "a finite number");
  }
  return x;
}

template <typename Int>
Int to_integer(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  Int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, value, "an integer");
  return x;
}

bool to_bool(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_value(key, value, "a boolean");
}

std::vector<double> to_list(std::string_view key, std::string_view value, std::size_t n) {
  std::vector<double> out;
  std::string_view rest = trim(value);
  while (true) {
    const std::size_t comma = rest.find(',');
    out.push_back(to_double(key, rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (out.size() != n) bad_value(key, value, (std::to_string(n) + " comma-separated numbers").c_str());
  return out;
}

std::string fmt(double x) { return format_double(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

std::string fmt_list(std::initializer_list<double> xs) {
  std::string out;
  for (double x : xs) {
    if (!out.empty()) out += ',';
    out += format_double(x);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;

template <typename T>
Setter set_double(T RunConfig::*group, double T::*field) {
  return [=](RunConfig& c, std::string_view k, std::string_view v) { (c.*group).*field = to_double(k, v); };
}

template <typename T>
Setter set_int(T RunConfig::*group, int T::*field) {
  return [=](RunConfig& c, std::string_view k, std::string_view v) { (c.*group).*field = to_integer<int>(k, v); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["method"] = [](RunConfig& c, std::string_view, std::string_view v) { c.method = parse_method(trim(v)); };

    t["method.hkf.delta"] = set_double(&RunConfig::hkf, &HuberConfig::delta);
    t["method.hkf.max_iters"] = set_int(&RunConfig::hkf, &HuberConfig::max_iters);
    t["method.hkf.tol"] = set_double(&RunConfig::hkf, &HuberConfig::converge_tol);

    t["method.cskf.chi2"] = set_double(&RunConfig::cskf, &CskfConfig::chi2_critical);
    t["method.cskf.significance"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.cskf = CskfConfig::for_dimension(kOdomDim, to_double(k, v));
    };

    t["method.orkf1.s"] = set_double(&RunConfig::orkf1, &Orkf1Config::s);
    t["method.orkf1.iters"] = set_int(&RunConfig::orkf1, &Orkf1Config::iters);
    t["method.orkf1.tol"] = set_double(&RunConfig::orkf1, &Orkf1Config::tol);

    t["method.orkf2.nu"] = set_double(&RunConfig::orkf2, &Orkf2Config::nu);
    t["method.orkf2.iters"] = set_int(&RunConfig::orkf2, &Orkf2Config::iters);
    t["method.orkf2.tol"] = set_double(&RunConfig::orkf2, &Orkf2Config::tol);
    t["method.orkf2.ut_alpha"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.orkf2.ut.alpha = to_double(k, v);
    };
    t["method.orkf2.ut_beta"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.orkf2.ut.beta = to_double(k, v);
    };
    t["method.orkf2.ut_kappa"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.orkf2.ut.kappa = to_double(k, v);
    };

    t["method.orkf3.u"] = set_double(&RunConfig::orkf3, &Orkf3Config::u);
    t["method.orkf3.tau"] = set_double(&RunConfig::orkf3, &Orkf3Config::tau);
    t["method.orkf3.rho"] = set_double(&RunConfig::orkf3, &Orkf3Config::rho);
    t["method.orkf3.iters"] = set_int(&RunConfig::orkf3, &Orkf3Config::iters);
    t["method.orkf3.tol"] = set_double(&RunConfig::orkf3, &Orkf3Config::tol);

    t["odom.r_diag"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      const auto xs = to_list(k, v, 4);
      c.odom_r_diag = Eigen::Vector4d(xs[0], xs[1], xs[2], xs[3]);
    };

    t["zupt.enabled"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.zupt.enabled = to_bool(k, v); };
    t["zupt.speed_threshold"] = set_double(&RunConfig::zupt, &ZuptConfig::speed_threshold);
    t["zupt.rate_threshold"] = set_double(&RunConfig::zupt, &ZuptConfig::rate_threshold);
    t["zupt.window"] = set_int(&RunConfig::zupt, &ZuptConfig::window);
    t["zupt.noise"] = set_double(&RunConfig::zupt, &ZuptConfig::noise);

    t["init.tilt_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::tilt_sigma);
    t["init.heading_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::heading_sigma);
    t["init.velocity_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::velocity_sigma);
    t["init.position_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::position_sigma);
    t["init.height_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::height_sigma);
    t["init.accel_bias_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::accel_bias_sigma);
    t["init.gyro_bias_sigma"] = set_double(&RunConfig::init, &InitialUncertainty::gyro_bias_sigma);

    t["imu.accel_noise_psd"] = set_double(&RunConfig::imu, &ImuNoise::accel_noise_psd);
    t["imu.gyro_noise_psd"] = set_double(&RunConfig::imu, &ImuNoise::gyro_noise_psd);
    t["imu.accel_bias_psd"] = set_double(&RunConfig::imu, &ImuNoise::accel_bias_psd);
    t["imu.gyro_bias_psd"] = set_double(&RunConfig::imu, &ImuNoise::gyro_bias_psd);

    t["mech.earth_rate"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.mechanization.earth_rate = to_bool(k, v);
    };
    return t;
  }();
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

KeyValues read_key_value_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_key_values(text.str(), file.string());
}

std::pair<std::string, std::string> parse_assignment(std::string_view token) {
  const std::size_t eq = token.find('=');
  if (eq == std::string_view::npos || trim(token.substr(0, eq)).empty()) {
    throw ConfigError("expected key=value, got '" + std::string(token) + "'");
  }
  return {std::string(trim(token.substr(0, eq))), std::string(trim(token.substr(eq + 1)))};
}

Mat initial_covariance(const InitialUncertainty& init, const Geodetic& at) {
  const double rn = meridian_radius(at.lat) + at.height;
  const double re = (transverse_radius(at.lat) + at.height) * std::cos(at.lat);
  Vec sd(kErrorStates);
  sd << init.tilt_sigma, init.tilt_sigma, init.heading_sigma,  //
      Eigen::Vector3d::Constant(init.velocity_sigma),           //
      init.position_sigma / rn, init.position_sigma / re, init.height_sigma,
      Eigen::Vector3d::Constant(init.accel_bias_sigma),  //
      Eigen::Vector3d::Constant(init.gyro_bias_sigma);
  return sd.array().square().matrix().asDiagonal();
}

RobustUpdateConfig RunConfig::robust() const {
  switch (method) {
    case Method::None:
      return StandardUpdate{};
    case Method::Hkf:
      return hkf;
    case Method::Cskf:
      return cskf;
    case Method::Orkf1:
      return orkf1;
    case Method::Orkf2:
      return orkf2;
    case Method::Orkf3:
      return orkf3;
  }
  return StandardUpdate{};
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, value);
}

void validate_config(const RunConfig& c) {
  const int d = kOdomDim;
  require(c.hkf.delta > 0.0, "method.hkf.delta must be positive");
  require(c.hkf.max_iters >= 1, "method.hkf.max_iters must be at least 1");
  require(c.hkf.converge_tol > 0.0, "method.hkf.tol must be positive");
  require(c.cskf.chi2_critical > 0.0, "method.cskf.chi2 must be positive");
  require(c.orkf1.s > d - 1, "method.orkf1.s must exceed the measurement dimension minus one");
  require(c.orkf1.iters >= 1, "method.orkf1.iters must be at least 1");
  require(c.orkf1.tol >= 0.0, "method.orkf1.tol must be non-negative");
  require(c.orkf2.nu > 0.0, "method.orkf2.nu must be positive");
  require(c.orkf2.iters >= 1, "method.orkf2.iters must be at least 1");
  require(c.orkf2.tol >= 0.0, "method.orkf2.tol must be non-negative");
  require(c.orkf2.ut.alpha > 0.0, "method.orkf2.ut_alpha must be positive");
  require(c.orkf3.u > d + 1, "method.orkf3.u must exceed the measurement dimension plus one");
  require(c.orkf3.tau > 0.0, "method.orkf3.tau must be positive");
  require(c.orkf3.rho > 0.0 && c.orkf3.rho <= 1.0, "method.orkf3.rho must lie in (0, 1]");
  require(c.orkf3.iters >= 1, "method.orkf3.iters must be at least 1");
  require(c.orkf3.tol >= 0.0, "method.orkf3.tol must be non-negative");
  require((c.odom_r_diag.array() > 0.0).all(), "odom.r_diag entries must be positive");
  require(c.zupt.speed_threshold > 0.0 && c.zupt.rate_threshold > 0.0, "zupt thresholds must be positive");
  require(c.zupt.window >= 1, "zupt.window must be at least 1");
  require(c.zupt.noise > 0.0, "zupt.noise must be positive");
  const InitialUncertainty& i = c.init;
  require(i.tilt_sigma > 0.0 && i.heading_sigma > 0.0 && i.velocity_sigma > 0.0 && i.position_sigma > 0.0 &&
              i.height_sigma > 0.0 && i.accel_bias_sigma > 0.0 && i.gyro_bias_sigma > 0.0,
          "init sigmas must be positive");
  require(c.imu.accel_noise_psd >= 0.0 && c.imu.gyro_noise_psd >= 0.0 && c.imu.accel_bias_psd >= 0.0 &&
              c.imu.gyro_bias_psd >= 0.0,
          "imu noise densities must be non-negative");
}

RunConfig make_config(const KeyValues& settings) {
  RunConfig cfg;
  for (const auto& [key, value] : settings) {
    if (key.rfind("sim.", 0) == 0) continue;
    apply_setting(cfg, key, value);
  }
  validate_config(cfg);
  return cfg;
}

KeyValues config_echo(const RunConfig& c) {
  KeyValues out;
  out.emplace_back("method", std::string(method_name(c.method)));
  const auto add_method = [&](Method m) {
    RunConfig t = c;
    t.method = m;
    for (const auto& kv : method_params(t)) out.push_back(kv);
  };
  add_method(Method::Hkf);
  add_method(Method::Cskf);
  add_method(Method::Orkf1);
  add_method(Method::Orkf2);
  add_method(Method::Orkf3);
  const Eigen::Vector4d& r = c.odom_r_diag;
  out.emplace_back("odom.r_diag", fmt_list({r[0], r[1], r[2], r[3]}));
  out.emplace_back("zupt.enabled", fmt(c.zupt.enabled));
  out.emplace_back("zupt.speed_threshold", fmt(c.zupt.speed_threshold));
  out.emplace_back("zupt.rate_threshold", fmt(c.zupt.rate_threshold));
  out.emplace_back("zupt.window", fmt(c.zupt.window));
  out.emplace_back("zupt.noise", fmt(c.zupt.noise));
  out.emplace_back("init.tilt_sigma", fmt(c.init.tilt_sigma));
  out.emplace_back("init.heading_sigma", fmt(c.init.heading_sigma));
  out.emplace_back("init.velocity_sigma", fmt(c.init.velocity_sigma));
  out.emplace_back("init.position_sigma", fmt(c.init.position_sigma));
  out.emplace_back("init.height_sigma", fmt(c.init.height_sigma));
  out.emplace_back("init.accel_bias_sigma", fmt(c.init.accel_bias_sigma));
  out.emplace_back("init.gyro_bias_sigma", fmt(c.init.gyro_bias_sigma));
  out.emplace_back("imu.accel_noise_psd", fmt(c.imu.accel_noise_psd));
  out.emplace_back("imu.gyro_noise_psd", fmt(c.imu.gyro_noise_psd));
  out.emplace_back("imu.accel_bias_psd", fmt(c.imu.accel_bias_psd));
  out.emplace_back("imu.gyro_bias_psd", fmt(c.imu.gyro_bias_psd));
  out.emplace_back("mech.earth_rate", fmt(c.mechanization.earth_rate));
  return out;
}

KeyValues method_params(const RunConfig& c) {
  switch (c.method) {
    case Method::None:
      return {};
    case Method::Hkf:
      return {{"method.hkf.delta", fmt(c.hkf.delta)},
              {"method.hkf.max_iters", fmt(c.hkf.max_iters)},
              {"method.hkf.tol", fmt(c.hkf.converge_tol)}};
    case Method::Cskf:
      return {{"method.cskf.chi2", fmt(c.cskf.chi2_critical)},
              {"method.cskf.significance", fmt(c.cskf.significance)}};
    case Method::Orkf1:
      return {{"method.orkf1.s", fmt(c.orkf1.s)},
              {"method.orkf1.iters", fmt(c.orkf1.iters)},
              {"method.orkf1.tol", fmt(c.orkf1.tol)}};
    case Method::Orkf2:
      return {{"method.orkf2.nu", fmt(c.orkf2.nu)},
              {"method.orkf2.iters", fmt(c.orkf2.iters)},
              {"method.orkf2.tol", fmt(c.orkf2.tol)},
              {"method.orkf2.ut_alpha", fmt(c.orkf2.ut.alpha)},
              {"method.orkf2.ut_beta", fmt(c.orkf2.ut.beta)},
              {"method.orkf2.ut_kappa", fmt(c.orkf2.ut.kappa)}};
    case Method::Orkf3:
      return {{"method.orkf3.u", fmt(c.orkf3.u)},
              {"method.orkf3.tau", fmt(c.orkf3.tau)},
              {"method.orkf3.rho", fmt(c.orkf3.rho)},
              {"method.orkf3.iters", fmt(c.orkf3.iters)},
              {"method.orkf3.tol", fmt(c.orkf3.tol)}};
  }
  return {};
}

ScenarioConfig make_simulation(const KeyValues& settings) {
  ScenarioConfig cfg;
  Geodetic origin{39.6465 * kDeg, -79.9700 * kDeg, 300.0};
  std::uint64_t seed = 1;
  SimulationSpec& s = cfg.spec;
  s.slip.probability_per_epoch = 0.05;
  s.slip.magnitude_sigma = 10.0 * s.noise.odom_speed_sigma;
  s.slip.seed = 2;
  for (const auto& [key, value] : settings) {
    if (key.rfind("sim.", 0) != 0) continue;
    if (key == "sim.scenario") {
      cfg.scenario = std::string(trim(value));
    } else if (key == "sim.seed") {
      seed = to_integer<std::uint64_t>(key, value);
    } else if (key == "sim.imu_rate") {
      s.imu_rate = to_double(key, value);
    } else if (key == "sim.odo_rate") {
      s.odo_rate = to_double(key, value);
    } else if (key == "sim.origin.lat_deg") {
      origin.lat = to_double(key, value) * kDeg;
    } else if (key == "sim.origin.lon_deg") {
      origin.lon = to_double(key, value) * kDeg;
    } else if (key == "sim.origin.h") {
      origin.height = to_double(key, value);
    } else if (key == "sim.slip.probability") {
      s.slip.probability_per_epoch = to_double(key, value);
    } else if (key == "sim.slip.magnitude_sigma") {
      s.slip.magnitude_sigma = to_double(key, value);
    } else if (key == "sim.slip.burst_length") {
      s.slip.burst_length = to_integer<int>(key, value);
    } else if (key == "sim.slip.seed") {
      s.slip.seed = to_integer<std::uint64_t>(key, value);
    } else if (key == "sim.noise.accel_psd") {
      s.noise.accel_noise_psd = to_double(key, value);
    } else if (key == "sim.noise.gyro_psd") {
      s.noise.gyro_noise_psd = to_double(key, value);
    } else if (key == "sim.noise.odom_speed_sigma") {
      s.noise.odom_speed_sigma = to_double(key, value);
    } else if (key == "sim.noise.odom_rate_sigma") {
      s.noise.odom_rate_sigma = to_double(key, value);
    } else if (key == "sim.noise.accel_bias") {
      const auto xs = to_list(key, value, 3);
      s.noise.accel_bias = Eigen::Vector3d(xs[0], xs[1], xs[2]);
    } else if (key == "sim.noise.gyro_bias") {
      const auto xs = to_list(key, value, 3);
      s.noise.gyro_bias = Eigen::Vector3d(xs[0], xs[1], xs[2]);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  s.trajectory = builtin_trajectory(cfg.scenario, origin, seed);
  return cfg;
}

KeyValues simulation_echo(const ScenarioConfig& cfg) {
  const SimulationSpec& s = cfg.spec;
  const Geodetic& o = s.trajectory.origin;
  const Eigen::Vector3d& ba = s.noise.accel_bias;
  const Eigen::Vector3d& bg = s.noise.gyro_bias;
  return {{"sim.scenario", cfg.scenario},
          {"sim.seed", std::to_string(s.trajectory.seed)},
          {"sim.imu_rate", fmt(s.imu_rate)},
          {"sim.odo_rate", fmt(s.odo_rate)},
          {"sim.origin.lat_deg", fmt(o.lat / kDeg)},
          {"sim.origin.lon_deg", fmt(o.lon / kDeg)},
          {"sim.origin.h", fmt(o.height)},
          {"sim.slip.probability", fmt(s.slip.probability_per_epoch)},
          {"sim.slip.magnitude_sigma", fmt(s.slip.magnitude_sigma)},
          {"sim.slip.burst_length", fmt(s.slip.burst_length)},
          {"sim.slip.seed", std::to_string(s.slip.seed)},
          {"sim.noise.accel_psd", fmt(s.noise.accel_noise_psd)},
          {"sim.noise.gyro_psd", fmt(s.noise.gyro_noise_psd)},
          {"sim.noise.odom_speed_sigma", fmt(s.noise.odom_speed_sigma)},
          {"sim.noise.odom_rate_sigma", fmt(s.noise.odom_rate_sigma)},
          {"sim.noise.accel_bias", fmt_list({ba.x(), ba.y(), ba.z()})},
          {"sim.noise.gyro_bias", fmt_list({bg.x(), bg.y(), bg.z()})}};
}

}  // namespace roverkf
