#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roverkf/config.hpp"
#include "roverkf/dataset.hpp"
#include "roverkf/errors.hpp"
#include "roverkf/pipeline.hpp"

namespace fs = std::filesystem;
using namespace roverkf;

namespace {

struct CommonOptions {
  std::vector<std::string> config_files;
  std::vector<std::string> overrides;
  std::string out;
};

fs::path output_dir(const CommonOptions& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("ROVERKF_OUTPUT_DIR"); env && *env) return env;
  return fs::current_path();
}

KeyValues gather(const std::vector<std::string>& files, const std::vector<std::string>& overrides) {
  KeyValues kv;
  for (const std::string& f : files) {
    const KeyValues file_kv = read_key_value_file(f);
    kv.insert(kv.end(), file_kv.begin(), file_kv.end());
  }
  for (const std::string& s : overrides) kv.push_back(parse_assignment(s));
  return kv;
}

void write_file(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path().empty() ? fs::path(".") : file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw StreamError("cannot write " + file.string());
  out << text;
}

void write_trajectory(const FilterRun& run, const Geodetic& origin, const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw StreamError("cannot write " + file.string());
  out << "t,lat,lon,h,ve,vn,vu,e,n,u\n";
  for (const NavState& s : run.trajectory) {
    const Enu p = to_enu(s.position, origin);
    for (double v : {s.time, s.position.lat, s.position.lon, s.position.height, s.velocity.x(), s.velocity.y(),
                     s.velocity.z(), p.e, p.n}) {
      out << format_double(v) << ',';
    }
    out << format_double(p.u) << '\n';
  }
}

void write_diagnostics(const FilterRun& run, const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw StreamError("cannot write " + file.string());
  out << "index,t,zupt,dz_v_lon,dz_v_lat,dz_v_ver,dz_psi_dot,noise_trace,gamma,mahalanobis_sq,lambda_mean,"
         "min_weight,iterations,gated\n";
  for (const EpochDiagnostics& e : run.epochs) {
    const CorrectionDiagnostics& c = e.correction;
    out << e.index << ',' << format_double(e.time) << ',' << (e.zupt ? 1 : 0);
    for (double v : {e.innovation[0], e.innovation[1], e.innovation[2], e.innovation[3], c.noise_trace, c.gamma,
                     c.mahalanobis_sq, c.lambda_mean, c.min_weight}) {
      out << ',' << format_double(v);
    }
    out << ',' << c.iterations << ',' << (c.gated ? 1 : 0) << '\n';
  }
}

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("-c,--config", o.config_files, "key=value config file (repeatable; later files win)");
  app->add_option("-s,--set", o.overrides, "override one setting, e.g. method.hkf.delta=3")->take_all();
  app->add_option("-o,--out", o.out, "output directory (default: $ROVERKF_OUTPUT_DIR or the working directory)");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Robust error-state EKF for wheeled-rover inertial/odometry navigation"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset bundle");
  add_common(sim, sim_opts);

  CommonOptions run_opts;
  std::string run_data;
  bool run_timing = false;
  auto* run = app.add_subcommand("run", "run one filter configuration on a dataset");
  add_common(run, run_opts);
  run->add_option("-d,--data", run_data, "dataset bundle directory")->required();
  run->add_flag("--timing", run_timing, "record wall-clock runtime in the report");

  CommonOptions cmp_opts;
  std::string cmp_data;
  std::string cmp_methods = "none,hkf,cskf,orkf1,orkf2,orkf3";
  std::vector<std::string> cmp_method_configs;
  bool cmp_timing = false;
  auto* cmp = app.add_subcommand("compare", "run several configurations and rank them");
  add_common(cmp, cmp_opts);
  cmp->add_option("-d,--data", cmp_data, "dataset bundle directory")->required();
  cmp->add_option("-m,--methods", cmp_methods, "comma-separated methods sharing the common settings");
  cmp->add_option("--method-config", cmp_method_configs,
                  "one config file per compared entry (replaces --methods)");
  cmp->add_flag("--timing", cmp_timing, "record wall-clock runtime in the report");

  CommonOptions swp_opts;
  std::string swp_data;
  std::string swp_key;
  std::string swp_values;
  bool swp_timing = false;
  auto* swp = app.add_subcommand("sweep", "evaluate a grid of values for one parameter");
  add_common(swp, swp_opts);
  swp->add_option("-d,--data", swp_data, "dataset bundle directory")->required();
  swp->add_option("-k,--key", swp_key, "parameter key, e.g. method.orkf1.s")->required();
  swp->add_option("-v,--values", swp_values, "comma-separated values")->required();
  swp->add_flag("--timing", swp_timing, "record wall-clock runtime in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::Config);
  }

  if (sim->parsed()) {
    const KeyValues kv = gather(sim_opts.config_files, sim_opts.overrides);
    for (const auto& [k, v] : kv) {
      if (k.rfind("sim.", 0) != 0) throw ConfigError("simulate accepts only sim.* keys, got '" + k + "'");
    }
    const ScenarioConfig sc = make_simulation(kv);
    const fs::path dir = output_dir(sim_opts);
    const SensorStream stream = simulate(sc.spec);
    write_dataset(stream, dir);
    std::string echo;
    for (const auto& [k, v] : simulation_echo(sc)) echo += k + "=" + v + "\n";
    write_file(dir / "scenario.cfg", echo);
    std::cout << "wrote " << stream.imu.size() << " IMU and " << stream.odom.size() << " odometry samples to "
              << dir.string() << '\n';
    return 0;
  }

  if (run->parsed()) {
    const RunConfig cfg = make_config(gather(run_opts.config_files, run_opts.overrides));
    const SensorStream stream = read_dataset(fs::path(run_data));
    const fs::path dir = output_dir(run_opts);
    fs::create_directories(dir);
    const FilterRun result = run_filter(stream, cfg);
    write_trajectory(result, stream.origin, dir / "trajectory.csv");
    write_diagnostics(result, dir / "diagnostics.csv");
    const ComparisonReport report = compare(stream, {cfg}, CompareOptions{run_timing, false});
    if (report.has_truth) write_error_csv(report.rows.front().errors, dir / "errors.csv");
    write_file(dir / "report.json", report_json(report));
    std::cout << report_table(report);
    return 0;
  }

  if (cmp->parsed()) {
    const KeyValues common = gather(cmp_opts.config_files, cmp_opts.overrides);
    std::vector<RunConfig> configs;
    if (!cmp_method_configs.empty()) {
      for (const std::string& f : cmp_method_configs) {
        KeyValues kv = read_key_value_file(f);
        kv.insert(kv.begin(), common.begin(), common.end());
        configs.push_back(make_config(kv));
      }
    } else {
      for (const std::string& m : split_list(cmp_methods)) {
        KeyValues kv = common;
        kv.emplace_back("method", m);
        configs.push_back(make_config(kv));
      }
    }
    const SensorStream stream = read_dataset(fs::path(cmp_data));
    const fs::path dir = output_dir(cmp_opts);
    const ComparisonReport report = compare(stream, configs, CompareOptions{cmp_timing, true});
    write_file(dir / "report.json", report_json(report));
    write_file(dir / "report.txt", report_table(report));
    std::cout << report_table(report);
    return 0;
  }

  if (swp->parsed()) {
    KeyValues kv = gather(swp_opts.config_files, swp_opts.overrides);
    // A method-specific key selects that method unless one was given.
    const bool has_method = std::any_of(kv.begin(), kv.end(), [](const auto& p) { return p.first == "method"; });
    if (!has_method && swp_key.rfind("method.", 0) == 0) {
      const std::size_t dot = swp_key.find('.', 7);
      if (dot != std::string::npos) kv.emplace_back("method", swp_key.substr(7, dot - 7));
    }
    const RunConfig base = make_config(kv);
    const std::vector<std::string> values = split_list(swp_values);
    std::vector<RunConfig> configs = sweep_configs(base, swp_key, values);
    const SensorStream stream = read_dataset(fs::path(swp_data));
    const fs::path dir = output_dir(swp_opts);
    ComparisonReport report = compare(stream, configs, CompareOptions{swp_timing, true});
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      report.rows[i].label = std::string(method_name(base.method)) + " " + swp_key + "=" + values[i];
    }
    write_file(dir / "report.json", report_json(report));
    write_file(dir / "report.txt", report_table(report));
    std::cout << report_table(report);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::Data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
