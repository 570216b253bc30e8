#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "roverkf/kf_core.hpp"

namespace roverkf {

/// Inverse-Wishart measurement-noise filter (one IW factor on R per epoch).
struct Orkf1Config {
  double s = 250.0;  // IW degrees of freedom, must exceed d − 1
  int iters = 5;
  double tol = 0.0;  // optional early exit on ‖Δmean‖; 0 runs all iterations
};

/// Gamma-scaled measurement-noise filter.
struct UnscentedParams {
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = 0.0;
};

struct Orkf2Config {
  double nu = 300.0;  // Gamma(ν/2, ν/2) prior on the noise scale
  int iters = 5;
  UnscentedParams ut;
  double tol = 0.0;
};

/// Dual inverse-Wishart filter: IW factors on the predicted covariance and
/// on R, with exponential forgetting on the carried R factor.
struct Orkf3Config {
  double u = 2000.0;    // initial R-factor degrees of freedom
  double tau = 2000.0;  // confidence in the predicted covariance
  double rho = 0.9999;  // forgetting factor in (0, 1]
  int iters = 5;
  double tol = 0.0;
};

/// (z − H·mean)(z − H·mean)ᵀ + H·cov·Hᵀ.
Mat sufficient_statistics(const GaussianBelief& moments, const Vec& z, const Mat& h);

/// Λ = (s·R + S) / (s + 1).
Mat orkf1_noise_blend(const Mat& r_nominal, const Mat& stats, double s);

struct Orkf1Result {
  GaussianBelief belief;
  Mat noise_estimate;  // Λ used in the final Gaussian step
  int iterations = 0;
};

/// Mean-field VB update with an inverse-Wishart prior IW(sR, s) on R.
/// The first round evaluates S from `seed` (the prior by default).
Orkf1Result orkf1_update(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r_nominal,
                         const Orkf1Config& cfg, const std::optional<GaussianBelief>& seed = std::nullopt);

using MeasurementFn = std::function<Vec(const Vec&)>;

struct SigmaPoints {
  std::vector<Vec> points;
  std::vector<double> mean_weights;
  std::vector<double> cov_weights;
};

/// 2n+1 scaled unscented points with λ = α²(n+κ) − n.
SigmaPoints make_sigma_points(const Vec& mean, const Mat& cov, const UnscentedParams& ut);

/// tr(E[(z − h(x))(z − h(x))ᵀ]·R⁻¹) for x ~ N(mean, cov), by the unscented transform.
double sigma_point_expectation(const Vec& mean, const Mat& cov, const MeasurementFn& h, const Vec& z,
                               const Mat& r, const UnscentedParams& ut);

/// E[λ] = (ν + d) / (ν + γ̃).
double orkf2_lambda_mean(double nu, int dim, double gamma_tilde);

struct Orkf2Result {
  GaussianBelief belief;
  double lambda_mean = 1.0;  // E[λ] after the final round
  double gamma_tilde = 0.0;  // γ̃ after the final round
  Mat noise_used;            // R / E[λ] of the final Gaussian step
  int iterations = 0;
};

/// Mean-field VB update with a Gamma-distributed precision scale on R. The
/// Gaussian step uses the Jacobian `h_jac`; γ̃ is taken through `h`.
Orkf2Result orkf2_update(const GaussianBelief& prior, const Vec& z, const MeasurementFn& h, const Mat& h_jac,
                         const Mat& r_nominal, const Orkf2Config& cfg, double seed_lambda = 1.0);

/// Linear-measurement overload, h(x) = H·x.
Orkf2Result orkf2_update(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r_nominal,
                         const Orkf2Config& cfg, double seed_lambda = 1.0);

/// Inverse-Wishart factor on R carried between epochs.
struct Orkf3State {
  double dof = 0.0;
  Mat scale;

  /// Prior whose mean equals `r_nominal`: dof = u, scale = (u − d − 1)·R.
  static Orkf3State from_nominal(const Mat& r_nominal, double u);
  /// mean of IW(scale, dof) = scale / (dof − d − 1).
  Mat mean() const;
};

struct Orkf3Result {
  GaussianBelief belief;
  Orkf3State state;          // posterior R factor to carry into the next epoch
  Mat noise_estimate;        // posterior-mean R used in the final round
  Mat prior_cov_estimate;    // posterior-mean predicted covariance used in the final round
  bool reset = false;        // carried state was degenerate and re-seeded from nominal
  int iterations = 0;
};

/// Variational update with IW priors on both the predicted covariance
/// (dof τ around the nominal prediction) and on R (forgotten by ρ each epoch).
Orkf3Result orkf3_update(const GaussianBelief& prior, const Vec& z, const Mat& h, const Mat& r_nominal,
                         const Orkf3State& state, const Orkf3Config& cfg);

}  // namespace roverkf
