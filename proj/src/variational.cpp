#include "roverkf/variational.hpp"

#include <cmath>
#include <string>

#include "roverkf/errors.hpp"

namespace roverkf {

namespace {

void check_measurement(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r,
                       const char* what) {
  check_square(prior.cov, prior.dim(), std::string(what) + ": covariance");
  check_shape(h, z.size(), prior.dim(), std::string(what) + ": measurement matrix");
  check_square(r, z.size(), std::string(what) + ": measurement noise");
}

bool settled(const Vec& before, const Vec& after, double tol) {
  return tol > 0.0 && (after - before).norm() < tol;
}

}  // namespace

Mat sufficient_statistics(const GaussianBelief& moments, const Vec& z, const Mat& h) {
  const Vec e = z - h * moments.mean;
  return symmetrize(e * e.transpose() + h * moments.cov * h.transpose());
}

Mat orkf1_noise_blend(const Mat& r_nominal, const Mat& stats, double s) {
  return symmetrize((s * r_nominal + stats) / (s + 1.0));
}

Orkf1Result orkf1_update(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r_nominal,
                         const Orkf1Config& cfg, const std::optional<GaussianBelief>& seed) {
  check_measurement(prior, z, h, r_nominal, "orkf1_update");
  const auto d = static_cast<double>(z.size());
  if (!(cfg.s > d - 1.0)) throw ConfigError("orkf1: s must exceed d - 1");
  if (cfg.iters < 1) throw ConfigError("orkf1: iters must be at least 1");

  Orkf1Result out;
  GaussianBelief moments = seed ? *seed : prior;
  for (int it = 0; it < cfg.iters; ++it) {
    out.noise_estimate = orkf1_noise_blend(r_nominal, sufficient_statistics(moments, z, h), cfg.s);
    out.belief = kf_update(prior, z, h, out.noise_estimate).belief;
    ++out.iterations;
    const bool done = it > 0 && settled(moments.mean, out.belief.mean, cfg.tol);
    moments = out.belief;
    if (done) break;
  }
  return out;
}

SigmaPoints make_sigma_points(const Vec& mean, const Mat& cov, const UnscentedParams& ut) {
  const Eigen::Index n = mean.size();
  check_square(cov, n, "sigma points: covariance");
  const auto nd = static_cast<double>(n);
  const double lambda = ut.alpha * ut.alpha * (nd + ut.kappa) - nd;
  const double c = nd + lambda;
  if (!(c > 0.0)) throw ConfigError("unscented transform: alpha^2 (n + kappa) must be positive");

  const Mat root = psd_factor(symmetrize(c * cov), "sigma-point covariance");
  SigmaPoints sp;
  sp.points.reserve(static_cast<std::size_t>(2 * n + 1));
  sp.points.push_back(mean);
  sp.mean_weights.push_back(lambda / c);
  sp.cov_weights.push_back(lambda / c + 1.0 - ut.alpha * ut.alpha + ut.beta);
  for (Eigen::Index i = 0; i < n; ++i) {
    sp.points.push_back(mean + root.col(i));
    sp.points.push_back(mean - root.col(i));
    for (int k = 0; k < 2; ++k) {
      sp.mean_weights.push_back(0.5 / c);
      sp.cov_weights.push_back(0.5 / c);
    }
  }
  return sp;
}

double sigma_point_expectation(const Vec& mean, const Mat& cov, const MeasurementFn& h, const Vec& z,
                               const Mat& r, const UnscentedParams& ut) {
  const SigmaPoints sp = make_sigma_points(mean, cov, ut);
  std::vector<Vec> projected;
  projected.reserve(sp.points.size());
  for (const Vec& p : sp.points) projected.push_back(h(p));
  const Eigen::Index m = z.size();
  check_square(r, m, "sigma_point_expectation: measurement noise");

  Vec z_hat = Vec::Zero(m);
  for (std::size_t i = 0; i < projected.size(); ++i) {
    check_size(projected[i], m, "sigma_point_expectation: h(x)");
    z_hat += sp.mean_weights[i] * projected[i];
  }
  // E[(z − h)(z − h)ᵀ] = (z − ẑ)(z − ẑ)ᵀ + Cov[h]
  const Vec e = z - z_hat;
  Mat expected = e * e.transpose();
  for (std::size_t i = 0; i < projected.size(); ++i) {
    const Vec d = projected[i] - z_hat;
    expected += sp.cov_weights[i] * d * d.transpose();
  }
  return spd_solve(r, symmetrize(expected), "measurement noise").trace();
}

double orkf2_lambda_mean(double nu, int dim, double gamma_tilde) {
  return (nu + static_cast<double>(dim)) / (nu + gamma_tilde);
}

Orkf2Result orkf2_update(const GaussianBelief& prior, const Vec& z, const MeasurementFn& h, const Mat& h_jac,
                         const Mat& r_nominal, const Orkf2Config& cfg, double seed_lambda) {
  check_measurement(prior, z, h_jac, r_nominal, "orkf2_update");
  if (!(cfg.nu > 0.0)) throw ConfigError("orkf2: nu must be positive");
  if (cfg.iters < 1) throw ConfigError("orkf2: iters must be at least 1");
  if (!(seed_lambda > 0.0)) throw ConfigError("orkf2: seed lambda must be positive");

  Orkf2Result out;
  out.lambda_mean = seed_lambda;
  Vec previous = prior.mean;
  const int d = static_cast<int>(z.size());
  for (int it = 0; it < cfg.iters; ++it) {
    out.noise_used = r_nominal / out.lambda_mean;
    out.belief = kf_update(prior, z, h_jac, out.noise_used).belief;
    out.gamma_tilde = sigma_point_expectation(out.belief.mean, out.belief.cov, h, z, r_nominal, cfg.ut);
    out.lambda_mean = orkf2_lambda_mean(cfg.nu, d, out.gamma_tilde);
    ++out.iterations;
    const bool done = it > 0 && settled(previous, out.belief.mean, cfg.tol);
    previous = out.belief.mean;
    if (done) break;
  }
  return out;
}

Orkf2Result orkf2_update(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r_nominal,
                         const Orkf2Config& cfg, double seed_lambda) {
  const MeasurementFn linear = [&h](const Vec& x) -> Vec { return h * x; };
  return orkf2_update(prior, z, linear, h, r_nominal, cfg, seed_lambda);
}

Orkf3State Orkf3State::from_nominal(const Mat& r_nominal, double u) {
  const auto d = static_cast<double>(r_nominal.rows());
  if (!(u > d + 1.0)) throw ConfigError("orkf3: u must exceed d + 1");
  return Orkf3State{u, (u - d - 1.0) * r_nominal};
}

Mat Orkf3State::mean() const {
  const auto d = static_cast<double>(scale.rows());
  return scale / (dof - d - 1.0);
}

Orkf3Result orkf3_update(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r_nominal,
                         const Orkf3State& state, const Orkf3Config& cfg) {
  check_measurement(prior, z, h, r_nominal, "orkf3_update");
  const Eigen::Index m = z.size();
  const auto d = static_cast<double>(m);
  if (!(cfg.tau > 0.0)) throw ConfigError("orkf3: tau must be positive");
  if (!(cfg.rho > 0.0 && cfg.rho <= 1.0)) throw ConfigError("orkf3: rho must lie in (0, 1]");
  if (!(cfg.u > d + 1.0)) throw ConfigError("orkf3: u must exceed d + 1");
  if (cfg.iters < 1) throw ConfigError("orkf3: iters must be at least 1");

  Orkf3Result out;
  Orkf3State carried = state;
  if (carried.scale.rows() != m || carried.scale.cols() != m || !(carried.dof > d + 1.0) ||
      !carried.scale.allFinite()) {
    carried = Orkf3State::from_nominal(r_nominal, cfg.u);
    out.reset = true;
  }

  // Time update of the R factor with forgetting.
  const double prior_dof = cfg.rho * (carried.dof - d - 1.0) + d + 1.0;
  const Mat prior_scale = cfg.rho * carried.scale;
  const double post_dof = prior_dof + 1.0;

  GaussianBelief moments = prior;
  Mat post_scale = prior_scale;
  for (int it = 0; it < cfg.iters; ++it) {
    const Vec dx = moments.mean - prior.mean;
    const Mat a = moments.cov + dx * dx.transpose();
    out.prior_cov_estimate = symmetrize((cfg.tau * prior.cov + a) / (cfg.tau + 1.0));

    post_scale = symmetrize(prior_scale + sufficient_statistics(moments, z, h));
    out.noise_estimate = post_scale / (post_dof - d - 1.0);

    GaussianBelief predicted{prior.mean, out.prior_cov_estimate};
    out.belief = kf_update(predicted, z, h, out.noise_estimate).belief;
    ++out.iterations;
    const bool done = it > 0 && settled(moments.mean, out.belief.mean, cfg.tol);
    moments = out.belief;
    if (done) break;
  }
  out.state = Orkf3State{post_dof, post_scale};
  return out;
}

}  // namespace roverkf
