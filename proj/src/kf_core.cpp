#include "roverkf/kf_core.hpp"

#include <cmath>

#include "roverkf/errors.hpp"

namespace roverkf {

GaussianBelief kf_predict(const GaussianBelief& belief, const Mat& transition, const Mat& process_noise) {
  const Eigen::Index n = belief.dim();
  check_square(belief.cov, n, "kf_predict: covariance");
  check_square(transition, n, "kf_predict: transition");
  check_square(process_noise, n, "kf_predict: process noise");
  GaussianBelief out;
  out.mean = transition * belief.mean;
  out.cov = symmetrize(transition * belief.cov * transition.transpose() + process_noise);
  return out;
}

KfUpdateResult kf_update(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r) {
  const Eigen::Index n = belief.dim();
  const Eigen::Index m = z.size();
  check_square(belief.cov, n, "kf_update: covariance");
  check_shape(h, m, n, "kf_update: measurement matrix");
  check_square(r, m, "kf_update: measurement noise");

  KfUpdateResult out;
  out.innovation = z - h * belief.mean;
  const Mat ph = belief.cov * h.transpose();
  out.innovation_cov = symmetrize(h * ph + r);
  // K = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ.
  const Mat gain = spd_solve(out.innovation_cov, ph.transpose(), "innovation covariance").transpose();
  out.belief.mean = belief.mean + gain * out.innovation;
  out.belief.cov = symmetrize((Mat::Identity(n, n) - gain * h) * belief.cov);
  return out;
}

StackedLsProblem build_stacked_ls(const GaussianBelief& belief, const Vec& z, const Mat& h, const Mat& r) {
  const Eigen::Index n = belief.dim();
  const Eigen::Index m = z.size();
  check_square(belief.cov, n, "build_stacked_ls: covariance");
  check_shape(h, m, n, "build_stacked_ls: measurement matrix");
  check_square(r, m, "build_stacked_ls: measurement noise");

  StackedLsProblem p;
  p.state_dim = n;
  p.whitening = Mat::Zero(n + m, n + m);
  p.whitening.topLeftCorner(n, n) = cholesky_lower(belief.cov, "prior covariance");
  p.whitening.bottomRightCorner(m, m) = cholesky_lower(r, "measurement noise");

  Mat stacked_design(n + m, n);
  stacked_design << Mat::Identity(n, n), h;
  Vec stacked_obs(n + m);
  stacked_obs << belief.mean, z;

  const auto lower = p.whitening.triangularView<Eigen::Lower>();
  p.design = lower.solve(stacked_design);
  p.observation = lower.solve(stacked_obs);
  return p;
}

GaussianBelief solve_stacked_ls(const StackedLsProblem& problem, const Vec& weights) {
  const Eigen::Index rows = problem.design.rows();
  const Eigen::Index n = problem.design.cols();
  Mat a = problem.design;
  Vec b = problem.observation;
  if (weights.size() != 0) {
    check_size(weights, rows, "solve_stacked_ls: weights");
    const Vec root = weights.cwiseSqrt();
    a = root.asDiagonal() * a;
    b = root.cwiseProduct(b);
  }

  // Column equilibration: x = D·y with D = diag(1/‖a_j‖).
  Vec col_scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double norm = a.col(j).norm();
    col_scale(j) = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  const Mat scaled = a * col_scale.asDiagonal();

  const Eigen::HouseholderQR<Mat> qr(scaled);
  const Mat r_factor = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r_factor(i, i) == 0.0 || !std::isfinite(r_factor(i, i))) {
      throw NumericalError("stacked least-squares design is rank deficient",
                           condition_number(scaled.transpose() * scaled));
    }
  }
  const Vec qtb = (qr.householderQ().transpose() * b).head(n);
  const auto upper = r_factor.triangularView<Eigen::Upper>();

  GaussianBelief out;
  out.mean = col_scale.asDiagonal() * upper.solve(qtb);
  // (AᵀA)⁻¹ = D R⁻¹ R⁻ᵀ D
  const Mat r_inv = upper.solve(Mat::Identity(n, n));
  out.cov = symmetrize(col_scale.asDiagonal() * (r_inv * r_inv.transpose()) * col_scale.asDiagonal());
  return out;
}

Vec stacked_residual(const StackedLsProblem& problem, const Vec& x) {
  return problem.observation - problem.design * x;
}

}  // namespace roverkf
