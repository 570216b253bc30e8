#include <doctest.h>

#include "roverkf/errors.hpp"
#include "roverkf/variational.hpp"
#include "support.hpp"

using namespace roverkf;
using roverkf::test::Rng;

namespace {

Mat mat1(double x) { return Mat::Constant(1, 1, x); }
Vec vec1(double x) { return Vec::Constant(1, x); }

double analytic_gamma(const GaussianBelief& q, const Vec& z, const Mat& h, const Mat& r) {
  const Vec e = z - h * q.mean;
  return ((e * e.transpose() + h * q.cov * h.transpose()) * r.inverse()).trace();
}

}  // namespace

TEST_CASE("orkf1: noise blend arithmetic") {
  CHECK(orkf1_noise_blend(mat1(1), mat1(3), 1.0)(0, 0) == doctest::Approx(2.0));
  Rng rng(31);
  const Mat r = rng.spd(4);
  for (double s : {1.0, 10.0, 250.0, 1e6}) CHECK(test::rel_diff(orkf1_noise_blend(r, r, s), r) < 1e-14);
}

TEST_CASE("orkf1: blended noise lies between nominal and the statistics") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat r = rng.spd(4);
    const Mat s = rng.spd(4, 1e-3) * rng.uniform(0.1, 50.0);
    const Mat lambda = orkf1_noise_blend(r, s, rng.uniform(1.0, 500.0));
    const auto ev = [](const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues(); };
    const double lo = std::min(ev(r).minCoeff(), ev(s).minCoeff());
    const double hi = std::max(ev(r).maxCoeff(), ev(s).maxCoeff());
    CHECK(ev(lambda).minCoeff() >= lo * (1 - 1e-12));
    CHECK(ev(lambda).maxCoeff() <= hi * (1 + 1e-12));
  }
}

TEST_CASE("orkf1: large degrees of freedom reproduce the standard update") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianBelief b = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Vec z = h * b.mean + 5.0 * rng.vector(4);
    Orkf1Config cfg;
    cfg.s = 1e8;
    const Orkf1Result o = orkf1_update(b, z, h, r, cfg);
    const KfUpdateResult kf = kf_update(b, z, h, r);
    CHECK(test::rel_diff(o.belief.mean, kf.belief.mean) < 1e-6);
    CHECK(test::rel_diff(o.belief.cov, kf.belief.cov) < 1e-6);
    CHECK(o.iterations == 5);
  }
}

TEST_CASE("orkf1: seeding at the fixed point leaves the belief unchanged") {
  // With z² = P + R the residual statistics from the standard posterior equal R.
  const double p = 0.7;
  const double r = 1.3;
  const GaussianBelief prior{vec1(0), mat1(p)};
  const Vec z = vec1(std::sqrt(p + r));
  const KfUpdateResult kf = kf_update(prior, z, mat1(1), mat1(r));
  const Orkf1Result o = orkf1_update(prior, z, mat1(1), mat1(r), Orkf1Config{}, kf.belief);
  CHECK(std::abs(o.belief.mean(0) - kf.belief.mean(0)) < 1e-12);
  CHECK(std::abs(o.belief.cov(0, 0) - kf.belief.cov(0, 0)) < 1e-12);
  CHECK(std::abs(o.noise_estimate(0, 0) - r) < 1e-12);
}

TEST_CASE("sigma points: one-dimensional hand set") {
  const SigmaPoints sp = make_sigma_points(vec1(0), mat1(1), UnscentedParams{});
  REQUIRE(sp.points.size() == 3);
  CHECK(sp.points[0](0) == doctest::Approx(0.0));
  CHECK(std::abs(sp.points[1](0)) == doctest::Approx(1.0));
  CHECK(sp.points[1](0) == doctest::Approx(-sp.points[2](0)));
  CHECK(sp.mean_weights[0] == doctest::Approx(0.0));
  CHECK(sp.mean_weights[1] == doctest::Approx(0.5));
  CHECK(sp.mean_weights[2] == doctest::Approx(0.5));
  double ex2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) ex2 += sp.mean_weights[i] * sp.points[i](0) * sp.points[i](0);
  CHECK(ex2 == doctest::Approx(1.0));
}

TEST_CASE("sigma points: weights sum to one and recover mean and covariance") {
  Rng rng(34);
  const GaussianBelief b = rng.belief(6);
  const SigmaPoints sp = make_sigma_points(b.mean, b.cov, UnscentedParams{0.5, 2.0, 1.0});
  double wsum = 0.0;
  Vec mean = Vec::Zero(6);
  for (std::size_t i = 0; i < sp.points.size(); ++i) {
    wsum += sp.mean_weights[i];
    mean += sp.mean_weights[i] * sp.points[i];
  }
  Mat cov = Mat::Zero(6, 6);
  for (std::size_t i = 0; i < sp.points.size(); ++i) {
    const Vec d = sp.points[i] - mean;
    cov += sp.cov_weights[i] * d * d.transpose();
  }
  CHECK(wsum == doctest::Approx(1.0));
  CHECK(test::rel_diff(mean, b.mean) < 1e-12);
  // The extra 1 − α² + β on the zeroth weight multiplies a zero deviation.
  CHECK(test::rel_diff(cov, b.cov) < 1e-12);
}

TEST_CASE("sigma-point expectation: exact for linear measurements") {
  Rng rng(35);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianBelief q = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Vec z = rng.vector(4);
    const double ut = sigma_point_expectation(q.mean, q.cov, [&](const Vec& x) -> Vec { return h * x; }, z, r,
                                              UnscentedParams{});
    const double exact = analytic_gamma(q, z, h, r);
    CHECK(std::abs(ut - exact) <= 1e-9 * std::max(1.0, exact));
  }
}

TEST_CASE("sigma-point expectation: zero residual and zero spread") {
  Rng rng(36);
  const Vec m = rng.vector(3);
  const Mat h = rng.matrix(2, 3);
  const auto fn = [&](const Vec& x) -> Vec { return h * x; };
  const double g = sigma_point_expectation(m, Mat::Zero(3, 3), fn, h * m, Mat::Identity(2, 2), UnscentedParams{});
  CHECK(std::abs(g) < 1e-20);
  const double tiny =
      sigma_point_expectation(m, 1e-12 * Mat::Identity(3, 3), fn, h * m, Mat::Identity(2, 2), UnscentedParams{});
  CHECK(tiny < 1e-10);
}

TEST_CASE("orkf2: expected precision scale") {
  CHECK(orkf2_lambda_mean(300.0, 4, 4.0) == doctest::Approx(1.0));
  CHECK(orkf2_lambda_mean(300.0, 1, 10.0) == doctest::Approx(301.0 / 310.0));
  CHECK(orkf2_lambda_mean(300.0, 1, 10.0) == doctest::Approx(0.9710).epsilon(1e-4));
  // Scalar: R = 1, residual 3, posterior variance 1 → γ̃ = 10.
  const double g = sigma_point_expectation(vec1(0), mat1(1), [](const Vec& x) -> Vec { return x; }, vec1(3),
                                           mat1(1), UnscentedParams{});
  CHECK(g == doctest::Approx(10.0));
}

TEST_CASE("orkf2: precision scale strictly decreases with the residual statistic") {
  for (double nu : {0.5, 10.0, 300.0, 1e6}) {
    for (int d : {1, 4}) {
      double prev = orkf2_lambda_mean(nu, d, 0.0);
      for (double g = 0.01; g < 1000.0; g *= 1.3) {
        const double w = orkf2_lambda_mean(nu, d, g);
        CHECK(w < prev);
        prev = w;
      }
    }
  }
}

TEST_CASE("orkf2: large nu reproduces the standard update") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianBelief b = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Vec z = h * b.mean + 5.0 * rng.vector(4);
    Orkf2Config cfg;
    cfg.nu = 1e8;
    const Orkf2Result o = orkf2_update(b, z, h, r, cfg);
    const KfUpdateResult kf = kf_update(b, z, h, r);
    CHECK(test::rel_diff(o.belief.mean, kf.belief.mean) < 1e-6);
    CHECK(test::rel_diff(o.belief.cov, kf.belief.cov) < 1e-6);
  }
}

TEST_CASE("orkf2: seeding at the fixed point leaves the belief unchanged") {
  const double p = 0.4;
  const double r = 2.0;
  const GaussianBelief prior{vec1(0), mat1(p)};
  const Vec z = vec1(std::sqrt(p + r));
  const KfUpdateResult kf = kf_update(prior, z, mat1(1), mat1(r));
  const Orkf2Result o = orkf2_update(prior, z, mat1(1), mat1(r), Orkf2Config{}, 1.0);
  CHECK(o.gamma_tilde == doctest::Approx(1.0));
  CHECK(std::abs(o.lambda_mean - 1.0) < 1e-12);
  CHECK(std::abs(o.belief.mean(0) - kf.belief.mean(0)) < 1e-12);
  CHECK(std::abs(o.belief.cov(0, 0) - kf.belief.cov(0, 0)) < 1e-12);
}

TEST_CASE("orkf3: prior bookkeeping") {
  Rng rng(38);
  const Mat r = rng.spd(4);
  const Orkf3State s = Orkf3State::from_nominal(r, 2000.0);
  CHECK(s.dof == 2000.0);
  CHECK(test::rel_diff(s.mean(), r) < 1e-12);
}

TEST_CASE("orkf3: large degrees of freedom reproduce the standard update") {
  Rng rng(39);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianBelief b = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Vec z = h * b.mean + 5.0 * rng.vector(4);
    Orkf3Config cfg;
    cfg.u = cfg.tau = 1e8;
    const Orkf3Result o = orkf3_update(b, z, h, r, Orkf3State::from_nominal(r, cfg.u), cfg);
    const KfUpdateResult kf = kf_update(b, z, h, r);
    CHECK(test::rel_diff(o.belief.mean, kf.belief.mean) < 1e-6);
    CHECK(test::rel_diff(o.belief.cov, kf.belief.cov) < 1e-6);
  }
}

TEST_CASE("orkf3: without forgetting the noise factor keeps accumulating evidence") {
  Rng rng(40);
  const Mat r = Mat::Identity(2, 2);
  Orkf3Config cfg;
  cfg.u = 10.0;
  cfg.rho = 1.0;
  Orkf3State state = Orkf3State::from_nominal(r, cfg.u);
  GaussianBelief b{Vec::Zero(2), Mat::Identity(2, 2)};
  double prev_var = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 50; ++k) {
    const double prev_dof = state.dof;
    const Orkf3Result o = orkf3_update(b, rng.vector(2), Mat::Identity(2, 2), r, state, cfg);
    CHECK(o.state.dof == doctest::Approx(prev_dof + 1.0));
    state = o.state;
    // Variance of a diagonal entry of IW(Ψ, ν) in d dimensions: 2ψ²/((ν−d−1)²(ν−d−3)).
    const double d = 2.0;
    const double psi = state.scale(0, 0);
    const double var = 2.0 * psi * psi / (std::pow(state.dof - d - 1.0, 2) * (state.dof - d - 3.0));
    const double rel_var = var / std::pow(state.mean()(0, 0), 2);
    CHECK(rel_var < prev_var);
    prev_var = rel_var;
  }
}

TEST_CASE("orkf3: forgetting tracks a slowly inflating noise") {
  Rng rng(41);
  const int n = 1000;
  const Mat r0 = 0.04 * Mat::Identity(2, 2);
  const Mat h = Mat::Identity(2, 2);
  Orkf3Config cfg;
  cfg.u = 10.0;
  cfg.tau = 2000.0;
  cfg.rho = 0.98;
  Orkf3State state = Orkf3State::from_nominal(r0, cfg.u);
  GaussianBelief b{Vec::Zero(2), Mat::Identity(2, 2)};
  const Mat q = 1e-4 * Mat::Identity(2, 2);
  Vec x = Vec::Zero(2);
  double scale = 1.0;
  for (int k = 0; k < n; ++k) {
    scale = 1.0 + 3.0 * k / (n - 1.0);
    x += 1e-2 * rng.vector(2);
    b = kf_predict(b, Mat::Identity(2, 2), q);
    const Vec z = x + std::sqrt(scale * 0.04) * rng.vector(2);
    const Orkf3Result o = orkf3_update(b, z, h, r0, state, cfg);
    b = o.belief;
    state = o.state;
  }
  const Mat truth = scale * r0;
  const Vec ratio = state.mean().diagonal().cwiseQuotient(truth.diagonal());
  MESSAGE("tracked/true noise ratio: " << ratio.transpose());
  CHECK(ratio.maxCoeff() < 1.5);
  CHECK(ratio.minCoeff() > 1.0 / 1.5);
  // The static nominal is off by the full factor of four.
  CHECK(truth(0, 0) / r0(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("orkf3: degenerate carried factor is reset to nominal") {
  const Mat r = Mat::Identity(4, 4);
  Orkf3State bad;
  bad.dof = 5.0;  // not above d + 1
  bad.scale = r;
  const Orkf3Result o =
      orkf3_update({Vec::Zero(4), Mat::Identity(4, 4)}, Vec::Ones(4), Mat::Identity(4, 4), r, bad, Orkf3Config{});
  CHECK(o.reset);
  CHECK(o.state.dof > 5.0);
  CHECK(o.belief.mean.allFinite());
}

TEST_CASE("variational updates de-weight a 10-sigma innovation") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianBelief b = rng.belief(15);
    const Mat h = rng.matrix(4, 15);
    const Mat r = rng.spd(4);
    const Mat s = h * b.cov * h.transpose() + r;
    Vec z = h * b.mean;
    z(trial % 4) += 10.0 * std::sqrt(s(trial % 4, trial % 4));
    CHECK(orkf1_update(b, z, h, r, Orkf1Config{}).noise_estimate.trace() > r.trace());
    CHECK(orkf2_update(b, z, h, r, Orkf2Config{}).noise_used.trace() > r.trace());
    const Orkf3Result o3 = orkf3_update(b, z, h, r, Orkf3State::from_nominal(r, 2000.0), Orkf3Config{});
    CHECK(o3.noise_estimate.trace() > r.trace());
  }
}

TEST_CASE("variational configs reject invalid parameters") {
  const GaussianBelief b{Vec::Zero(4), Mat::Identity(4, 4)};
  const Mat i4 = Mat::Identity(4, 4);
  Orkf1Config c1;
  c1.s = 2.0;  // not above d − 1 = 3
  CHECK_THROWS_AS(orkf1_update(b, Vec::Zero(4), i4, i4, c1), ConfigError);
  Orkf2Config c2;
  c2.nu = 0.0;
  CHECK_THROWS_AS(orkf2_update(b, Vec::Zero(4), i4, i4, c2), ConfigError);
  Orkf3Config c3;
  c3.rho = 1.5;
  CHECK_THROWS_AS(orkf3_update(b, Vec::Zero(4), i4, i4, Orkf3State::from_nominal(i4, 2000.0), c3), ConfigError);
}
