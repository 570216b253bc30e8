#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "roverkf/kf_core.hpp"

namespace roverkf::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

  Mat matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }
  Vec vector(Eigen::Index n) { return matrix(n, 1); }

  /// Well-conditioned SPD matrix: A·Aᵀ/n + floor·I.
  Mat spd(Eigen::Index n, double floor = 0.1) {
    const Mat a = matrix(n, n);
    return a * a.transpose() / static_cast<double>(n) + floor * Mat::Identity(n, n);
  }

  GaussianBelief belief(Eigen::Index n) { return GaussianBelief{vector(n), spd(n)}; }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline double rel_diff(const Mat& a, const Mat& b) {
  const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Textbook update with an explicit inverse, kept independent of the library.
inline GaussianBelief dense_kf_update(const GaussianBelief& b, const Vec& z, const Mat& h, const Mat& r) {
  const Mat s = h * b.cov * h.transpose() + r;
  const Mat k = b.cov * h.transpose() * s.fullPivLu().inverse();
  const Mat i = Mat::Identity(b.cov.rows(), b.cov.cols());
  return GaussianBelief{b.mean + k * (z - h * b.mean), (i - k * h) * b.cov};
}

}  // namespace roverkf::test
