#include "roverkf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <future>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "roverkf/dataset.hpp"
#include "roverkf/errors.hpp"

namespace roverkf {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void rethrow_at(const Error& e, const std::string& where) {
  const std::string what = where + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::Config:
      throw ConfigError(what);
    case ErrorKind::Data:
      throw StreamError(what);
    case ErrorKind::Numerical:
      if (const auto* n = dynamic_cast<const NumericalError*>(&e)) throw NumericalError(where, *n);
      throw NumericalError(what, 0.0);
  }
  throw;
}

bool finite(const NavState& n) {
  return n.attitude.coeffs().allFinite() && n.velocity.allFinite() && std::isfinite(n.position.lat) &&
         std::isfinite(n.position.lon) && std::isfinite(n.position.height) && n.accel_bias.allFinite() &&
         n.gyro_bias.allFinite();
}

std::string epoch_label(const char* kind, std::size_t index, double t) {
  return std::string(kind) + " epoch " + std::to_string(index) + " (t=" + format_double(t) + " s)";
}

ordered_json quartiles_json(const Quartiles& q) {
  return ordered_json{{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}};
}

ordered_json kv_json(const KeyValues& kv) {
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : kv) out[k] = v;
  return out;
}

}  // namespace

FilterRun run_filter(const SensorStream& stream, const RunConfig& config, const FilterObserver& observer) {
  validate_config(config);
  validate_stream(stream);

  const RobustUpdateConfig robust = config.robust();
  const Eigen::Matrix4d r_nominal = config.odom_noise();

  FilterRun run;
  NavState nav = stream.initial;
  ErrorStateBelief belief = make_error_state_belief(initial_covariance(config.init, nav.position));
  std::optional<Orkf3State> orkf3_state;
  std::deque<WheelOdomSample> window;

  run.trajectory.reserve(stream.imu.size() + 1);
  run.trajectory.push_back(nav);
  run.epochs.reserve(stream.odom.size());

  std::size_t next_odo = 0;
  const auto correct_pending = [&]() {
    while (next_odo < stream.odom.size() && stream.odom[next_odo].time <= nav.time) {
      const WheelOdomSample& odo = stream.odom[next_odo];
      try {
        window.push_back(odo);
        while (window.size() > static_cast<std::size_t>(config.zupt.window)) window.pop_front();
        const std::vector<WheelOdomSample> recent(window.begin(), window.end());

        EpochDiagnostics epoch;
        epoch.index = next_odo;
        epoch.time = odo.time;
        if (config.zupt.enabled && detect_zero_velocity(recent, config.zupt)) {
          const CorrectionOutcome z = apply_zupt(belief, nav, config.zupt);
          belief = z.belief;
          nav = z.nav;
          epoch.zupt = true;
          epoch.correction.method = method_of(robust);
          epoch.correction.noise_trace = 3.0 * config.zupt.noise;
          ++run.n_zupt;
        } else {
          const OdomInnovation innov = build_odometry_innovation(nav, odo, r_nominal);
          CorrectionResult c = apply_correction(belief, nav, innov, robust, orkf3_state);
          belief = std::move(c.belief);
          nav = c.nav;
          if (c.orkf3_state) orkf3_state = std::move(c.orkf3_state);
          epoch.innovation = innov.dz;
          epoch.correction = c.diagnostics;
          if (c.diagnostics.gated) ++run.n_gated;
        }
        if (!finite(nav)) throw NumericalError("non-finite state after correction", 0.0);
        run.epochs.push_back(epoch);
        if (observer) observer(nav, belief);
      } catch (const Error& e) {
        rethrow_at(e, epoch_label("odometry", next_odo, odo.time));
      }
      ++next_odo;
    }
  };

  correct_pending();
  for (std::size_t k = 0; k < stream.imu.size(); ++k) {
    const ImuSample& imu = stream.imu[k];
    try {
      const PredictResult p =
          error_state_predict(belief, nav, imu, imu.time - nav.time, config.imu, config.mechanization);
      belief = p.belief;
      nav = p.nav;
      nav.time = imu.time;
      if (!finite(nav)) throw NumericalError("non-finite state after propagation", 0.0);
    } catch (const Error& e) {
      rethrow_at(e, epoch_label("imu", k, imu.time));
    }
    if (observer) observer(nav, belief);
    correct_pending();
    run.trajectory.push_back(nav);
  }
  run.dropped_odometry = stream.odom.size() - next_odo;
  run.final_belief = belief;
  return run;
}

EnuTrajectory enu_trajectory(std::span<const NavState> states, const Geodetic& origin) {
  EnuTrajectory out;
  out.origin = origin;
  for (const NavState& s : states) out.push_back(s.time, to_enu(s.position, origin));
  return out;
}

EnuTrajectory enu_trajectory(std::span<const TruthRecord> truth, const Geodetic& origin) {
  EnuTrajectory out;
  out.origin = origin;
  for (const TruthRecord& r : truth) out.push_back(r.time, to_enu(r.position, origin));
  return out;
}

double max_separation(const FilterRun& a, const FilterRun& b) {
  if (a.trajectory.empty() || b.trajectory.empty()) throw EvaluationError("empty trajectory");
  const Geodetic& origin = a.trajectory.front().position;
  return summarize(error_series(enu_trajectory(a.trajectory, origin), enu_trajectory(b.trajectory, origin)))
      .max_norm;
}

ComparisonReport compare(const SensorStream& stream, const std::vector<RunConfig>& configs,
                         const CompareOptions& options) {
  if (configs.empty()) throw ConfigError("compare needs at least one config");
  for (const RunConfig& c : configs) validate_config(c);

  ComparisonReport report;
  report.has_truth = stream.truth.has_value() && !stream.truth->empty();
  report.scenario = {{"seed", std::to_string(stream.seed)},
                     {"imu_rate", format_double(stream.imu_rate)},
                     {"odo_rate", format_double(stream.odo_rate)},
                     {"n_imu", std::to_string(stream.imu.size())},
                     {"n_odom", std::to_string(stream.odom.size())}};
  std::optional<EnuTrajectory> truth;
  if (report.has_truth) truth = enu_trajectory(*stream.truth, stream.origin);

  const auto evaluate = [&](const RunConfig& cfg) {
    MethodReport row;
    row.method = cfg.method;
    row.label = std::string(method_name(cfg.method));
    row.params = method_params(cfg);
    row.config = config_echo(cfg);
    const auto start = std::chrono::steady_clock::now();
    const FilterRun run = run_filter(stream, cfg);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (options.timing) row.runtime_s = elapsed.count();
    row.n_epochs = run.epochs.size();
    row.n_gated = run.n_gated;
    row.n_zupt = run.n_zupt;
    if (truth) {
      row.errors = error_series(enu_trajectory(run.trajectory, stream.origin), *truth);
      row.summary = summarize(row.errors);
    }
    return row;
  };

  if (options.parallel && configs.size() > 1) {
    std::vector<std::future<MethodReport>> jobs;
    jobs.reserve(configs.size());
    for (const RunConfig& c : configs) jobs.push_back(std::async(std::launch::async, evaluate, std::cref(c)));
    for (auto& j : jobs) report.rows.push_back(j.get());
  } else {
    for (const RunConfig& c : configs) report.rows.push_back(evaluate(c));
  }

  if (report.has_truth) {
    for (MethodReport& r : report.rows) {
      r.rank = 1 + static_cast<int>(std::count_if(report.rows.begin(), report.rows.end(), [&](const MethodReport& o) {
                 return o.summary->rms < r.summary->rms;
               }));
    }
  }
  return report;
}

std::vector<RunConfig> sweep_configs(const RunConfig& base, const std::string& key,
                                     const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<RunConfig> out;
  for (const std::string& v : values) {
    RunConfig c = base;
    apply_setting(c, key, v);
    validate_config(c);
    out.push_back(c);
  }
  return out;
}

std::string report_json(const ComparisonReport& report) {
  ordered_json methods = ordered_json::array();
  for (const MethodReport& r : report.rows) {
    ordered_json m;
    m["method"] = std::string(method_name(r.method));
    m["label"] = r.label;
    m["params"] = kv_json(r.params);
    if (r.summary) {
      m["rms_m"] = r.summary->rms;
      m["max_norm_m"] = r.summary->max_norm;
      m["quartiles_norm"] = quartiles_json(r.summary->norm);
      m["quartiles_up"] = quartiles_json(r.summary->up);
    } else {
      m["rms_m"] = nullptr;
      m["max_norm_m"] = nullptr;
      m["quartiles_norm"] = nullptr;
      m["quartiles_up"] = nullptr;
    }
    m["n_epochs"] = r.n_epochs;
    m["n_gated"] = r.n_gated;
    m["n_zupt"] = r.n_zupt;
    m["runtime_s"] = r.runtime_s ? ordered_json(*r.runtime_s) : ordered_json(nullptr);
    m["rank"] = r.rank > 0 ? ordered_json(r.rank) : ordered_json(nullptr);
    m["config"] = kv_json(r.config);
    methods.push_back(std::move(m));
  }
  ordered_json out;
  out["has_truth"] = report.has_truth;
  out["dataset"] = kv_json(report.scenario);
  out["methods"] = std::move(methods);
  return out.dump(2) + "\n";
}

std::string report_table(const ComparisonReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "method" << std::right << std::setw(6) << "rank" << std::setw(11) << "rms_m"
      << std::setw(11) << "max_m" << std::setw(11) << "median_m" << std::setw(11) << "q3_m" << std::setw(9)
      << "epochs" << std::setw(8) << "gated" << std::setw(7) << "zupt" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const MethodReport& r : report.rows) {
    out << std::left << std::setw(28) << r.label << std::right << std::setw(6)
        << (r.rank > 0 ? std::to_string(r.rank) : std::string("-"));
    if (r.summary) {
      out << std::setw(11) << r.summary->rms << std::setw(11) << r.summary->max_norm << std::setw(11)
          << r.summary->norm.median << std::setw(11) << r.summary->norm.q3;
    } else {
      out << std::setw(11) << "-" << std::setw(11) << "-" << std::setw(11) << "-" << std::setw(11) << "-";
    }
    out << std::setw(9) << r.n_epochs << std::setw(8) << r.n_gated << std::setw(7) << r.n_zupt << '\n';
  }
  if (!report.has_truth) out << "no truth available: diagnostics only\n";
  return out.str();
}

}  // namespace roverkf
