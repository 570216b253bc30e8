#pragma once

#include <vector>

#include "roverkf/kf_core.hpp"

namespace roverkf {

/// Huber M-estimation update settings.
struct HuberConfig {
  double delta = 1.5;          // Δ, transition between quadratic and linear cost
  int max_iters = 25;          // IRLS iterations after the least-squares start
  double converge_tol = 1e-8;  // stop when ‖Δx‖ ≤ tol·‖x‖
};

/// Chi-square covariance scaling settings.
struct CskfConfig {
  double chi2_critical = 9.488;  // χ²(m, α); the default is m = 4, α = 0.05
  double significance = 0.05;

  /// Critical value looked up from the built-in table.
  static CskfConfig for_dimension(int dof, double significance);
};

/// Upper-tail χ² critical value for dof ∈ [1, 10], significance ∈ {0.05, 0.01}.
/// Throws ConfigError outside the table.
double chi2_critical_value(int dof, double significance);

double huber_rho(double residual, double delta);
/// ψ(z) = ρ'(z)/z; ψ(0) = 1.
double huber_weight(double residual, double delta);
/// Σ ρ(yᵢ − bᵢ·x) over all stacked rows.
double huber_objective(const StackedLsProblem& problem, const Vec& x, double delta);

struct HkfResult {
  GaussianBelief belief;
  Vec weights;  // Ψ at the returned estimate, one per stacked row (n prior rows, then m measurement rows)
  int iterations = 0;
  bool converged = false;
  /// J(x) for the start and for every iterate.
  std::vector<double> objective_history;
};

/// Huber regression update solved by iteratively re-weighted least squares
/// on the whitened stacked problem. Not converging within max_iters is
/// reported through `converged`, not thrown.
HkfResult hkf_update(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r,
                     const HuberConfig& cfg);

struct CskfResult {
  GaussianBelief belief;
  double mahalanobis_sq = 0.0;  // M² = eᵀ(HPHᵀ + R)⁻¹e
  double gamma = 0.0;           // M² / χ²
  bool inflated = false;        // γ > 1
  Mat noise_used;               // R, or the inflated R̂
};

/// R̂ = (γ − 1)·HPHᵀ + γ·R.
Mat cskf_inflated_noise(const Mat& hph, const Mat& r, double gamma);

/// Chi-square gated covariance-scaling update. Inliers (γ ≤ 1) take the
/// standard update unchanged; outliers are updated once with R̂.
CskfResult cskf_update(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r,
                       const CskfConfig& cfg);

}  // namespace roverkf
