#pragma once

#include "roverkf/linalg.hpp"

namespace roverkf {

/// Mean and covariance of a Gaussian state estimate.
struct GaussianBelief {
  Vec mean;
  Mat cov;

  Eigen::Index dim() const { return mean.size(); }
};

struct KfUpdateResult {
  GaussianBelief belief;
  Vec innovation;      // z − H·mean
  Mat innovation_cov;  // H·P·Hᵀ + R
};

/// Whitened stacked form of one update:
///   Y = B·x + ξ,  B = S⁻¹[I; H],  Y = S⁻¹[mean; z],  S·Sᵀ = blockdiag(P, R).
struct StackedLsProblem {
  Mat design;       // B, (n+m)×n
  Vec observation;  // Y, n+m
  Mat whitening;    // S, lower-triangular
  Eigen::Index state_dim = 0;
};

GaussianBelief kf_predict(const GaussianBelief& belief, const Mat& transition, const Mat& process_noise);

KfUpdateResult kf_update(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r);

StackedLsProblem build_stacked_ls(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r);

/// Weighted least-squares solution of a stacked problem:
///   x = (BᵀΨB)⁻¹BᵀΨY,  P = (BᵀΨB)⁻¹,
/// with Ψ = diag(weights). Pass an empty `weights` for Ψ = I.
///
/// Solved by Householder QR on the diagonally preconditioned √Ψ·B, so the
/// covariance never goes through explicit normal equations.
GaussianBelief solve_stacked_ls(const StackedLsProblem& problem, const Vec& weights = Vec());

/// Residual Y − B·x of a stacked problem.
Vec stacked_residual(const StackedLsProblem& problem, const Vec& x);

}  // namespace roverkf
