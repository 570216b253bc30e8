#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace roverkf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// (A + Aᵀ) / 2.
Mat symmetrize(const Mat& a);

/// 2-norm condition number of a symmetric matrix (infinity if singular).
double condition_number(const Mat& a);

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// On failure the factorization is retried once with `a + εI`,
/// ε = 1e-12·trace(a). A second failure throws NumericalError naming `what`.
Mat cholesky_lower(const Mat& a, std::string_view what);

/// Solves a·x = b for SPD `a` through its Cholesky factor (same retry policy).
Mat spd_solve(const Mat& a, const Mat& b, std::string_view what);

/// Inverse of an SPD matrix through its Cholesky factor.
Mat spd_inverse(const Mat& a, std::string_view what);

/// Symmetric square root factor L with L·Lᵀ = a for a PSD `a`. A zero matrix
/// gives a zero factor; otherwise behaves like cholesky_lower.
Mat psd_factor(const Mat& a, std::string_view what);

void check_square(const Mat& a, Eigen::Index n, std::string_view what);
void check_size(const Vec& v, Eigen::Index n, std::string_view what);
void check_shape(const Mat& a, Eigen::Index rows, Eigen::Index cols, std::string_view what);

}  // namespace roverkf
