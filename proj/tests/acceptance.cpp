// Acceptance criteria, one PASS/FAIL line each. Exit status is the number of failures.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nav_fixtures.hpp"
#include "roverkf/config.hpp"
#include "roverkf/kf_core.hpp"
#include "roverkf/metrics.hpp"
#include "roverkf/pipeline.hpp"
#include "roverkf/robust_updates.hpp"
#include "roverkf/variational.hpp"
#include "support.hpp"

using namespace roverkf;
using roverkf::test::Rng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SensorStream truncated(SensorStream s, std::size_t n_imu) {
  s.imu.resize(std::min(n_imu, s.imu.size()));
  const double t_end = s.imu.back().time;
  while (!s.odom.empty() && s.odom.back().time > t_end) s.odom.pop_back();
  return s;
}

RunConfig with_method(Method m) {
  RunConfig c;
  c.method = m;
  return c;
}

double rms_error(const SensorStream& s, const FilterRun& r) {
  return summarize(error_series(enu_trajectory(r.trajectory, s.origin), enu_trajectory(*s.truth, s.origin))).rms;
}

/// Median RMS over `seeds` for each config, sessions run concurrently.
std::vector<double> median_rms(const std::vector<RunConfig>& configs, std::uint64_t first_seed, int seeds,
                               double slip_probability) {
  std::vector<std::future<std::vector<double>>> jobs;
  for (int k = 0; k < seeds; ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      const SensorStream s = simulate(test::scenario("field", first_seed + k, slip_probability, 10.0));
      std::vector<double> out;
      for (const RunConfig& c : configs) out.push_back(rms_error(s, run_filter(s, c)));
      return out;
    }));
  }
  std::vector<std::vector<double>> per_config(configs.size());
  for (auto& j : jobs) {
    const std::vector<double> r = j.get();
    for (std::size_t i = 0; i < r.size(); ++i) per_config[i].push_back(r[i]);
  }
  std::vector<double> med;
  for (const auto& v : per_config) med.push_back(median(v));
  return med;
}

// 1. Stacked least squares equals the closed-form update.
Outcome oracle_equivalence() {
  Rng rng(1001);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GaussianBelief b = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Vec z = rng.vector(4);
    const GaussianBelief closed = kf_update(b, z, h, r).belief;
    const GaussianBelief ls = solve_stacked_ls(build_stacked_ls(b, z, h, r));
    const GaussianBelief dense = test::dense_kf_update(b, z, h, r);
    worst = std::max({worst, test::rel_diff(ls.mean, closed.mean), test::rel_diff(ls.cov, closed.cov),
                      test::rel_diff(closed.mean, dense.mean), test::rel_diff(closed.cov, dense.cov)});
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-9 && elapsed < 5.0, "max rel diff " + fmt(worst) + " over 1000 instances in " + fmt(elapsed) + " s"};
}

// 2. Every robust method collapses onto the standard filter in its Gaussian limit.
Outcome gaussian_limit() {
  const SensorStream s = truncated(simulate(test::scenario("field", 1002)), 2500);
  if (s.odom.size() != 500) return {false, "expected 500 odometry epochs, got " + std::to_string(s.odom.size())};
  const FilterRun none = run_filter(s, RunConfig{});
  std::vector<std::pair<std::string, RunConfig>> limits;
  RunConfig c = with_method(Method::Hkf);
  c.hkf.delta = 1e9;
  limits.emplace_back("hkf", c);
  c = with_method(Method::Cskf);
  c.cskf.chi2_critical = 1e12;
  limits.emplace_back("cskf", c);
  c = with_method(Method::Orkf1);
  c.orkf1.s = 1e8;
  limits.emplace_back("orkf1", c);
  c = with_method(Method::Orkf2);
  c.orkf2.nu = 1e8;
  limits.emplace_back("orkf2", c);
  c = with_method(Method::Orkf3);
  c.orkf3.u = 1e8;
  c.orkf3.tau = 1e8;
  limits.emplace_back("orkf3", c);

  bool ok = true;
  std::string detail = "max gap over 500 epochs:";
  for (const auto& [name, cfg] : limits) {
    const double gap = max_separation(run_filter(s, cfg), none);
    ok = ok && gap <= 1e-6;
    detail += " " + name + "=" + fmt(gap) + "m";
  }
  return {ok, detail};
}

// 3. HKF converges to NONE as Δ grows.
Outcome delta_convergence() {
  const SensorStream s = simulate(test::scenario("field", 1003, 0.05, 10.0));
  const FilterRun none = run_filter(s, RunConfig{});
  std::vector<double> gaps;
  for (double delta : {1.0, 1.5, 2.0, 3.0}) {
    RunConfig c = with_method(Method::Hkf);
    c.hkf.delta = delta;
    gaps.push_back(max_separation(run_filter(s, c), none));
  }
  bool ok = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) ok = ok && gaps[i] < gaps[i - 1];
  std::string detail = "max separation for delta 1,1.5,2,3:";
  for (double g : gaps) detail += " " + fmt(g);
  return {ok, detail + " m"};
}

// 4. Robust methods beat NONE on slip-contaminated runs.
Outcome robustness_benefit() {
  const auto t0 = Clock::now();
  const std::vector<Method> methods{Method::None, Method::Hkf, Method::Cskf, Method::Orkf1, Method::Orkf2,
                                    Method::Orkf3};
  std::vector<RunConfig> configs;
  for (Method m : methods) configs.push_back(with_method(m));
  const std::vector<double> med = median_rms(configs, 2000, 20, 0.05);
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 120.0;
  std::string detail = "median RMS:";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    detail += " " + std::string(method_name(methods[i])) + "=" + fmt(med[i]);
    if (i == 0) continue;
    ok = ok && med[i] < med[0];
    if (methods[i] == Method::Hkf || methods[i] == Method::Cskf) ok = ok && med[i] <= 0.8 * med[0];
  }
  return {ok, detail + " m; " + fmt(elapsed) + " s"};
}

// 5. Degrees-of-freedom trends reverse under heavy contamination.
Outcome dof_trends() {
  std::vector<RunConfig> configs;
  for (double s : {10.0, 50.0, 250.0}) {
    RunConfig c = with_method(Method::Orkf1);
    c.orkf1.s = s;
    configs.push_back(c);
  }
  for (double nu : {10.0, 100.0, 300.0}) {
    RunConfig c = with_method(Method::Orkf2);
    c.orkf2.nu = nu;
    configs.push_back(c);
  }
  const int seeds = 9;
  const std::vector<double> light = median_rms(configs, 3000, seeds, 0.01);
  const std::vector<double> heavy = median_rms(configs, 3100, seeds, 0.20);

  const bool s_trend = light[1] <= light[0] && light[2] <= light[1];
  const bool nu_trend = light[4] <= light[3] && light[5] <= light[4];
  const bool s_reversed = heavy[0] < heavy[2];
  const bool nu_reversed = heavy[3] < heavy[5];
  std::string detail = "median RMS over " + std::to_string(seeds) + " seeds; 1% slip s=10,50,250: ";
  detail += fmt(light[0]) + "," + fmt(light[1]) + "," + fmt(light[2]);
  detail += " nu=10,100,300: " + fmt(light[3]) + "," + fmt(light[4]) + "," + fmt(light[5]);
  detail += "; 20% slip s: " + fmt(heavy[0]) + "," + fmt(heavy[1]) + "," + fmt(heavy[2]);
  detail += " nu: " + fmt(heavy[3]) + "," + fmt(heavy[4]) + "," + fmt(heavy[5]);
  return {s_trend && nu_trend && s_reversed && nu_reversed, detail};
}

// 6. The χ² gate fires at its nominal rate.
Outcome chi2_calibration() {
  Rng rng(1006);
  const GaussianBelief b = rng.belief(15);
  const Mat h = rng.matrix(4, 15);
  const Mat r = rng.spd(4);
  const Mat l = Mat((h * b.cov * h.transpose() + r).llt().matrixL());
  const int n = 100000;
  int fired = 0;
  for (int i = 0; i < n; ++i) {
    const Vec z = h * b.mean + l * rng.vector(4);
    if (cskf_update(b, z, h, r, CskfConfig{}).inflated) ++fired;
  }
  const double rate = static_cast<double>(fired) / n;
  return {std::abs(rate - 0.05) <= 0.01, "gate rate " + fmt(100.0 * rate) + "% at chi2 9.488"};
}

// 7. The unscented expectation is exact for linear measurements.
Outcome sigma_point_exactness() {
  Rng rng(1007);
  UnscentedParams ut;
  ut.alpha = 1.0;
  ut.beta = 2.0;
  ut.kappa = 0.0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GaussianBelief q = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Vec z = rng.vector(4);
    const double got = sigma_point_expectation(q.mean, q.cov, [&](const Vec& x) -> Vec { return h * x; }, z, r, ut);
    const Vec e = z - h * q.mean;
    const double exact = ((e * e.transpose() + h * q.cov * h.transpose()) * r.inverse()).trace();
    worst = std::max(worst, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
  }
  return {worst <= 1e-9, "max rel diff " + fmt(worst) + " over 1000 instances"};
}

// 8. Structural invariants.
Outcome invariant_suite() {
  std::vector<std::string> broken;

  // Covariance symmetric and PSD after every step of a 10^4-step run.
  const SensorStream s = truncated(simulate(test::scenario("field", 1008, 0.05, 10.0)), 10000);
  std::size_t checks = 0;
  double worst_asym = 0.0;
  double worst_eig = 0.0;
  for (Method m : {Method::None, Method::Hkf, Method::Cskf, Method::Orkf1, Method::Orkf2, Method::Orkf3}) {
    run_filter(s, with_method(m), [&](const NavState&, const ErrorStateBelief& b) {
      ++checks;
      const Mat& p = b.cov;
      const double scale = p.cwiseAbs().maxCoeff();
      worst_asym = std::max(worst_asym, (p - p.transpose()).cwiseAbs().maxCoeff() / scale);
      const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(p, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      worst_eig = std::min(worst_eig, min_eig / scale);
    });
  }
  if (worst_asym > 0.0) broken.push_back("asymmetry " + fmt(worst_asym));
  if (worst_eig < -1e-12) broken.push_back("negative eigenvalue " + fmt(worst_eig));

  // IRLS objective monotone.
  Rng rng(1018);
  int increases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GaussianBelief b = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    Vec z = h * b.mean + rng.vector(4);
    z(trial % 4) += 20.0 * rng.normal();
    HuberConfig cfg;
    cfg.delta = rng.uniform(0.5, 3.0);
    const auto hist = hkf_update(b, z, h, r, cfg).objective_history;
    for (std::size_t i = 1; i < hist.size(); ++i) {
      if (hist[i] > hist[i - 1] * (1.0 + 1e-12) + 1e-14) ++increases;
    }
  }
  if (increases > 0) broken.push_back(std::to_string(increases) + " IRLS objective increases");

  // ORKF2 weight strictly decreasing in the residual statistic.
  int non_monotone = 0;
  for (double nu : {1.0, 10.0, 300.0, 1e6}) {
    double prev = orkf2_lambda_mean(nu, 4, 0.0);
    for (double g = 1e-3; g < 1e4; g *= 1.1) {
      const double w = orkf2_lambda_mean(nu, 4, g);
      if (!(w < prev)) ++non_monotone;
      prev = w;
    }
  }
  if (non_monotone > 0) broken.push_back(std::to_string(non_monotone) + " ORKF2 weight violations");

  // Error-state reset: injected error is recovered and the correction leaves a zero mean.
  double worst_reset = 0.0;
  bool mean_reset = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const NavState n = test::random_nav(rng);
    Vec dx = 1e-3 * rng.vector(kErrorStates);
    dx.segment<2>(es::kPos) *= 1e-5;  // radians of latitude and longitude
    worst_reset = std::max(worst_reset, (error_between(inject_error(n, dx), n) - dx).cwiseAbs().maxCoeff());
    WheelOdomSample o;
    o.rear_wheel_speed = rng.normal();
    const ErrorStateBelief b = make_error_state_belief(1e-3 * rng.spd(kErrorStates));
    const CorrectionResult c = apply_correction(b, n, build_odometry_innovation(n, o, default_odometry_noise()),
                                                RobustUpdateConfig{Orkf1Config{}});
    mean_reset = mean_reset && c.belief.mean.isZero(0.0);
  }
  if (worst_reset > 1e-12) broken.push_back("reset round-trip " + fmt(worst_reset));
  if (!mean_reset) broken.push_back("nonzero mean after correction");

  std::string detail = std::to_string(checks) + " covariance checks (max asym " + fmt(worst_asym) + ", min eig " +
                       fmt(worst_eig) + "); 1000 IRLS runs; reset error " + fmt(worst_reset);
  for (const std::string& b : broken) detail += "; BROKEN " + b;
  return {broken.empty(), detail};
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" ROVERKF_CLI_PATH "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. simulate → run → compare twice gives byte-identical reports.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("roverkf_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> reports;
  std::vector<std::string> run_reports;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / std::to_string(pass);
    const std::string data = (dir / "data").string();
    const std::string q = "\"";
    if (run_cli("simulate -s sim.seed=77 sim.slip.probability=0.05 -o " + q + data + q) != 0 ||
        run_cli("run -d " + q + data + q + " -s method=orkf2 -o " + q + (dir / "run").string() + q) != 0 ||
        run_cli("compare -d " + q + data + q + " -o " + q + (dir / "compare").string() + q) != 0) {
      fs::remove_all(root);
      return {false, "CLI invocation failed on pass " + std::to_string(pass + 1)};
    }
    run_reports.push_back(read_file(dir / "run" / "report.json"));
    reports.push_back(read_file(dir / "compare" / "report.json"));
  }
  fs::remove_all(root);
  const bool ok = !reports[0].empty() && reports[0] == reports[1] && run_reports[0] == run_reports[1];
  return {ok, "compare report " + std::to_string(reports[0].size()) + " bytes, " +
                  (reports[0] == reports[1] ? "identical" : "different") + "; run report " +
                  (run_reports[0] == run_reports[1] ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 oracle equivalence", oracle_equivalence},
      {"C2 Gaussian-limit collapse", gaussian_limit},
      {"C3 Huber threshold convergence", delta_convergence},
      {"C4 robustness benefit", robustness_benefit},
      {"C5 degrees-of-freedom trends", dof_trends},
      {"C6 chi-square calibration", chi2_calibration},
      {"C7 sigma-point exactness", sigma_point_exactness},
      {"C8 invariant suite", invariant_suite},
      {"C9 pipeline determinism", determinism},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && name.rfind(only, 0) != 0) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
