#include "roverkf/robust_updates.hpp"

#include <array>
#include <cmath>
#include <string>

#include "roverkf/errors.hpp"

namespace roverkf {

namespace {

constexpr std::array<double, 10> kChi2Alpha05 = {3.841, 5.991, 7.815, 9.488, 11.070,
                                                 12.592, 14.067, 15.507, 16.919, 18.307};
constexpr std::array<double, 10> kChi2Alpha01 = {6.635, 9.210, 11.345, 13.277, 15.086,
                                                 16.812, 18.475, 20.090, 21.666, 23.209};

void validate(const HuberConfig& cfg) {
  if (!(cfg.delta > 0.0)) throw ConfigError("hkf: delta must be positive");
  if (cfg.max_iters < 1) throw ConfigError("hkf: max_iters must be at least 1");
  if (!(cfg.converge_tol > 0.0)) throw ConfigError("hkf: converge_tol must be positive");
}

Vec huber_weights(const Vec& residual, double delta) {
  Vec w(residual.size());
  for (Eigen::Index i = 0; i < residual.size(); ++i) w(i) = huber_weight(residual(i), delta);
  return w;
}

}  // namespace

double chi2_critical_value(int dof, double significance) {
  if (dof < 1 || dof > 10) {
    throw ConfigError("chi2 table covers 1..10 degrees of freedom, got " + std::to_string(dof));
  }
  if (std::abs(significance - 0.05) < 1e-12) return kChi2Alpha05[static_cast<std::size_t>(dof - 1)];
  if (std::abs(significance - 0.01) < 1e-12) return kChi2Alpha01[static_cast<std::size_t>(dof - 1)];
  throw ConfigError("chi2 table covers significance 0.05 and 0.01, got " + std::to_string(significance));
}

CskfConfig CskfConfig::for_dimension(int dof, double significance) {
  return CskfConfig{chi2_critical_value(dof, significance), significance};
}

double huber_rho(double residual, double delta) {
  const double a = std::abs(residual);
  if (a <= delta) return 0.5 * residual * residual;
  return delta * a - 0.5 * delta * delta;
}

double huber_weight(double residual, double delta) {
  const double a = std::abs(residual);
  if (a <= delta) return 1.0;
  return delta / a;
}

double huber_objective(const StackedLsProblem& problem, const Vec& x, double delta) {
  const Vec res = stacked_residual(problem, x);
  double j = 0.0;
  for (Eigen::Index i = 0; i < res.size(); ++i) j += huber_rho(res(i), delta);
  return j;
}

HkfResult hkf_update(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r,
                     const HuberConfig& cfg) {
  validate(cfg);
  const StackedLsProblem problem = build_stacked_ls(belief, z, h, r);

  HkfResult out;
  Vec x = solve_stacked_ls(problem).mean;
  out.objective_history.push_back(huber_objective(problem, x, cfg.delta));

  for (int it = 0; it < cfg.max_iters; ++it) {
    const Vec w = huber_weights(stacked_residual(problem, x), cfg.delta);
    const Vec next = solve_stacked_ls(problem, w).mean;
    const double step = (next - x).norm();
    x = next;
    ++out.iterations;
    out.objective_history.push_back(huber_objective(problem, x, cfg.delta));
    if (step == 0.0 || step <= cfg.converge_tol * x.norm()) {
      out.converged = true;
      break;
    }
  }

  out.weights = huber_weights(stacked_residual(problem, x), cfg.delta);
  out.belief.mean = x;
  out.belief.cov = solve_stacked_ls(problem, out.weights).cov;
  return out;
}

Mat cskf_inflated_noise(const Mat& hph, const Mat& r, double gamma) {
  return symmetrize((gamma - 1.0) * hph + gamma * r);
}

CskfResult cskf_update(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r,
                       const CskfConfig& cfg) {
  if (!(cfg.chi2_critical > 0.0)) throw ConfigError("cskf: chi2_critical must be positive");
  if (!(cfg.significance > 0.0 && cfg.significance < 1.0)) {
    throw ConfigError("cskf: significance must lie in (0, 1)");
  }
  check_square(belief.cov, belief.dim(), "cskf_update: covariance");
  check_shape(h, z.size(), belief.dim(), "cskf_update: measurement matrix");
  check_square(r, z.size(), "cskf_update: measurement noise");

  CskfResult out;
  const Vec e = z - h * belief.mean;
  const Mat hph = symmetrize(h * belief.cov * h.transpose());
  const Mat s = symmetrize(hph + r);
  out.mahalanobis_sq = e.dot(spd_solve(s, e, "innovation covariance").col(0));
  out.gamma = out.mahalanobis_sq / cfg.chi2_critical;
  out.inflated = out.gamma > 1.0;
  out.noise_used = out.inflated ? cskf_inflated_noise(hph, r, out.gamma) : r;
  out.belief = kf_update(belief, z, h, out.noise_used).belief;
  return out;
}

}  // namespace roverkf
