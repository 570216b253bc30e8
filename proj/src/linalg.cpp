#include "roverkf/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "roverkf/errors.hpp"

namespace roverkf {

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

double condition_number(const Mat& a) {
  if (a.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(a), Eigen::EigenvaluesOnly);
  const Vec ev = eig.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

namespace {

bool factor(const Mat& a, Eigen::LLT<Mat>& llt) {
  llt.compute(a);
  if (llt.info() != Eigen::Success) return false;
  // LLT does not detect every indefinite input; reject non-finite or
  // non-positive pivots explicitly.
  const auto d = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0) || !std::isfinite(d(i))) return false;
  }
  return true;
}

Eigen::LLT<Mat> factor_with_retry(const Mat& a, std::string_view what) {
  Eigen::LLT<Mat> llt;
  if (factor(a, llt)) return llt;
  const double eps = 1e-12 * a.trace();
  if (eps > 0.0 && std::isfinite(eps)) {
    Mat reg = a;
    reg.diagonal().array() += eps;
    if (factor(reg, llt)) return llt;
  }
  throw NumericalError("Cholesky factorization failed for " + std::string(what),
                       condition_number(a));
}

}  // namespace

Mat cholesky_lower(const Mat& a, std::string_view what) {
  return factor_with_retry(a, what).matrixL();
}

Mat spd_solve(const Mat& a, const Mat& b, std::string_view what) {
  return factor_with_retry(a, what).solve(b);
}

Mat spd_inverse(const Mat& a, std::string_view what) {
  return symmetrize(factor_with_retry(a, what).solve(Mat::Identity(a.rows(), a.cols())));
}

Mat psd_factor(const Mat& a, std::string_view what) {
  if (a.isZero(0.0)) return Mat::Zero(a.rows(), a.cols());
  return cholesky_lower(a, what);
}

void check_square(const Mat& a, Eigen::Index n, std::string_view what) {
  check_shape(a, n, n, what);
}

void check_size(const Vec& v, Eigen::Index n, std::string_view what) {
  if (v.size() != n) {
    throw ConfigError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                      std::to_string(v.size()));
  }
}

void check_shape(const Mat& a, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (a.rows() != rows || a.cols() != cols) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", got " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()));
  }
}

}  // namespace roverkf
