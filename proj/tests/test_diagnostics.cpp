#include <catch2/catch.hpp>

#include <cmath>

#include "linucb/diagnostics.hpp"

using linucb::CovarianceState;
using linucb::EstimatorState;
using linucb::Matrix;
using linucb::PhaseSnapshot;
using linucb::Rng;
using linucb::Vector;

namespace {

CovarianceState make_cov(const Matrix& lambda, long long t) {
  CovarianceState cov;
  cov.t = t;
  cov.lambda_matrix = lambda;
  cov.pairs = linucb::eig_sym(lambda);
  return cov;
}

EstimatorState make_est(const Vector& theta_bar, Rng& rng) {
  EstimatorState est;
  est.theta_bar = theta_bar;
  est.theta_hat = linucb::project_sphere(theta_bar, rng);
  est.b_vec = Vector::Zero(theta_bar.size());
  est.eta_oracle = Vector::Zero(theta_bar.size());
  return est;
}

}  // namespace

TEST_CASE("eigen_benchmark values and scaling") {
  const auto bench = linucb::eigen_benchmark(5.0, 1e4, 3);
  REQUIRE(bench.lambda_star == Approx(std::sqrt(125000.0)).epsilon(1e-14));
  REQUIRE(bench.lambda_star == Approx(353.5534).margin(1e-4));
  REQUIRE(bench.n_eff == bench.lambda_star);

  const auto quadrupled = linucb::eigen_benchmark(5.0, 4e4, 3);
  REQUIRE(quadrupled.lambda_star == Approx(2.0 * bench.lambda_star).epsilon(1e-13));

  REQUIRE_THROWS_AS(linucb::eigen_benchmark(5.0, 1e4, 1), std::invalid_argument);
}

TEST_CASE("phase_snapshot at the identity start") {
  Rng rng(3);
  const CovarianceState cov = make_cov(Matrix::Identity(3, 3), 0);
  const EstimatorState est = make_est(Vector::Zero(3), rng);
  Vector theta = Vector::Zero(3);
  theta[0] = 1.0;

  const PhaseSnapshot snap = linucb::phase_snapshot(cov, est, theta, 2.0);
  REQUIRE(snap.lambda_min == Approx(1.0));
  REQUIRE(snap.lambda_bar == Approx(1.0));
  REQUIRE(snap.lambda_top == Approx(1.0));
  REQUIRE(snap.ratio_2d == Approx(1.0));
  REQUIRE(snap.c_t == 0.0);
  REQUIRE(snap.benchmark == 0.0);
}

TEST_CASE("phase_snapshot on a fixed spectrum") {
  Rng rng(4);
  Matrix lambda = Matrix::Zero(3, 3);
  lambda.diagonal() << 9.0, 4.0, 1.0;
  const CovarianceState cov = make_cov(lambda, 11);
  const EstimatorState est = make_est(Vector::Zero(3), rng);
  Vector theta = Vector::Zero(3);
  theta[0] = 1.0;
  const double beta = 2.0;

  const PhaseSnapshot snap = linucb::phase_snapshot(cov, est, theta, beta);
  REQUIRE(snap.lambda_bar == Approx(2.5));
  REQUIRE(snap.ratio_2d == Approx(4.0));
  REQUIRE(snap.align_star == Approx(0.0).margin(1e-12));
  REQUIRE(snap.c_t == Approx(1.0 / (beta * std::sqrt(11.0))).epsilon(1e-13));
  REQUIRE(snap.benchmark == Approx(std::sqrt(2.0 * beta * beta * 11.0 / 4.0)).epsilon(1e-13));
  // theta_bar = 0, so the weighted error is ||theta_star||_Lambda = 3.
  REQUIRE(snap.weighted_err == Approx(3.0).margin(1e-12));
  REQUIRE(snap.plain_err == Approx(1.0).margin(1e-12));

  // Benchmark-relative deviations reproduce the eigenvalues.
  for (Eigen::Index i = 1; i < 3; ++i) {
    const double rebuilt = snap.benchmark * (1.0 + snap.delta_i[i - 1]);
    REQUIRE(rebuilt == Approx(cov.pairs.values[i]).margin(1e-9));
  }
}

TEST_CASE("phase_snapshot ordering holds on random spectra") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m = Matrix::Identity(4, 4);
    for (int s = 0; s < 10; ++s) {
      const Vector a = rng.unit_vector(4);
      m += a * a.transpose();
    }
    const CovarianceState cov = make_cov(m, 10);
    const EstimatorState est = make_est(rng.unit_vector(4), rng);
    const PhaseSnapshot snap =
        linucb::phase_snapshot(cov, est, rng.unit_vector(4), 1.5);
    REQUIRE(snap.lambda_min <= snap.lambda_bar);
    REQUIRE(snap.lambda_bar <= snap.lambda_top);
    REQUIRE(snap.ratio_2d >= 1.0);
  }
}

TEST_CASE("weighted_error_max") {
  PhaseSnapshot a, b, c;
  a.weighted_err = 1.0;
  b.weighted_err = 3.0;
  c.weighted_err = 2.0;
  REQUIRE(linucb::weighted_error_max({a}) == Approx(1.0));
  REQUIRE(linucb::weighted_error_max({a, b}) == Approx(3.0));
  REQUIRE(linucb::weighted_error_max({a, b, c}) == Approx(3.0));
  REQUIRE(linucb::weighted_error_max({a, b, c}) >= linucb::weighted_error_max({a, b}));
  REQUIRE_THROWS_AS(linucb::weighted_error_max({}), std::invalid_argument);
}

TEST_CASE("weighted error matches a direct recomputation") {
  Rng rng(6);
  Matrix m = 2.0 * Matrix::Identity(3, 3);
  for (int s = 0; s < 8; ++s) {
    const Vector a = rng.unit_vector(3);
    m += a * a.transpose();
  }
  const CovarianceState cov = make_cov(m, 9);
  const Vector theta_bar = 0.8 * rng.unit_vector(3);
  const EstimatorState est = make_est(theta_bar, rng);
  const Vector theta = rng.unit_vector(3);
  const PhaseSnapshot snap = linucb::phase_snapshot(cov, est, theta, 1.0);
  const Vector diff = theta_bar - theta;
  REQUIRE(snap.weighted_err == Approx(std::sqrt(diff.dot(m * diff))).margin(1e-10));
}

TEST_CASE("slope_fit recovers planted power laws") {
  std::vector<std::pair<double, double>> quarter, sqrt_scaled, two_points;
  for (double t : {10.0, 40.0, 90.0, 400.0, 1600.0}) {
    quarter.emplace_back(t, std::pow(t, -0.25));
    sqrt_scaled.emplace_back(t, 3.0 * std::sqrt(t));
  }
  const auto fit_quarter = linucb::slope_fit(quarter);
  REQUIRE(fit_quarter.slope == Approx(-0.25).margin(1e-12));

  const auto fit_sqrt = linucb::slope_fit(sqrt_scaled);
  REQUIRE(fit_sqrt.slope == Approx(0.5).margin(1e-12));
  REQUIRE(fit_sqrt.intercept == Approx(std::log(3.0)).margin(1e-12));

  two_points.emplace_back(2.0, 5.0);
  two_points.emplace_back(8.0, 40.0);
  const auto fit_two = linucb::slope_fit(two_points);
  REQUIRE(fit_two.slope ==
          Approx((std::log(40.0) - std::log(5.0)) / (std::log(8.0) - std::log(2.0)))
              .margin(1e-12));

  REQUIRE_THROWS_AS(linucb::slope_fit({{1.0, 1.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(linucb::slope_fit({{1.0, 1.0}, {2.0, -1.0}}),
                    std::invalid_argument);
}

TEST_CASE("mab_balance symmetric instances split the horizon exactly") {
  const auto counts = linucb::mab_balance({0.4, 0.4, 0.4, 0.4}, 1.5, 1000.0);
  for (double n : counts) REQUIRE(n == 250.0);
}

TEST_CASE("mab_balance two-arm instance satisfies the balancing equations") {
  const std::vector<double> mu = {1.0, 0.5};
  const auto counts = linucb::mab_balance(mu, 2.0, 1000.0);
  const double level0 = mu[0] + 2.0 / std::sqrt(counts[0]);
  const double level1 = mu[1] + 2.0 / std::sqrt(counts[1]);
  REQUIRE(std::abs(level0 - level1) <= 1e-9 * std::abs(level0));
  REQUIRE(std::abs(counts[0] + counts[1] - 1000.0) <= 1e-6);
  REQUIRE(counts[0] > counts[1]);
}

TEST_CASE("mab_balance sends vanishing exploration to the best arm") {
  const auto counts = linucb::mab_balance({1.0, 0.5, 0.2}, 1e-3, 10000.0);
  REQUIRE(counts[0] == Approx(10000.0).epsilon(1e-4));
  REQUIRE(counts[1] < 1.0);
  REQUIRE(counts[2] < 1.0);
}

TEST_CASE("mab_balance randomized instances") {
  Rng rng(911);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t k = 2 + rng.next_u64() % 5;
    std::vector<double> mu(k);
    for (double& m : mu) m = rng.uniform01();
    const double beta = 0.5 + 2.5 * rng.uniform01();
    const double horizon = 100.0 + std::floor(rng.uniform01() * 99900.0);
    const auto counts = linucb::mab_balance(mu, beta, horizon);

    double level_min = 1e300, level_max = -1e300, total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const double level = mu[a] + beta / std::sqrt(counts[a]);
      level_min = std::min(level_min, level);
      level_max = std::max(level_max, level);
      total += counts[a];
    }
    REQUIRE(level_max - level_min <= 1e-9 * std::abs(level_max));
    REQUIRE(std::abs(total - horizon) <= 1e-6);
  }
}

TEST_CASE("mab_balance validates inputs") {
  REQUIRE_THROWS_AS(linucb::mab_balance({0.5}, 1.0, 100.0), std::invalid_argument);
  REQUIRE_THROWS_AS(linucb::mab_balance({0.5, 0.2}, 0.0, 100.0), std::invalid_argument);
  REQUIRE_THROWS_AS(linucb::mab_balance({0.5, 0.2}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("stability_check ratios") {
  const double t_ee = std::exp(std::exp(1.0));
  const double threshold = linucb::beta_stability(1.0, 2, t_ee, 1.0);

  const auto at = linucb::stability_check(threshold, 1.0, 2, t_ee);
  REQUIRE(at.ratio == Approx(1.0).epsilon(1e-13));
  REQUIRE_FALSE(at.satisfied);

  const auto twice = linucb::stability_check(2.0 * threshold, 1.0, 2, t_ee);
  REQUIRE(twice.ratio == Approx(2.0).epsilon(1e-13));
  REQUIRE(twice.satisfied);

  // The c = 2 stability schedule lands at exactly twice the unit threshold.
  const auto from_schedule =
      linucb::stability_check(linucb::beta_stability(1.0, 2, t_ee, 2.0), 1.0, 2, t_ee);
  REQUIRE(from_schedule.ratio == Approx(2.0).epsilon(1e-13));
}

TEST_CASE("live snapshots respect the trace law and benchmark consistency") {
  linucb::BanditConfig config;
  config.d = 3;
  config.horizon = 60;
  config.sigma = 0.5;
  config.beta.mode = linucb::BetaSchedule::Mode::constant;
  config.beta.value = 2.0;
  config.theta_star = linucb::BanditConfig::default_theta_star(3);
  config.base_seed = 12;

  Rng rng(config.base_seed);
  auto [cov, est] = linucb::init_state(config, rng);
  for (int t = 1; t <= 60; ++t) {
    linucb::step(cov, est, config, 2.0, rng);
    const PhaseSnapshot snap =
        linucb::phase_snapshot(cov, est, config.theta_star, 2.0);
    // Sum of eigenvalues recovered from the snapshot fields alone.
    const double trace = snap.lambda_top + (config.d - 1) * snap.lambda_bar;
    REQUIRE(trace == Approx(config.d * config.ridge + t).margin(1e-6));
    for (Eigen::Index i = 0; i < snap.delta_i.size(); ++i) {
      const double rebuilt = snap.benchmark * (1.0 + snap.delta_i[i]);
      REQUIRE(rebuilt == Approx(cov.pairs.values[i + 1]).margin(1e-9));
    }
  }
}

TEST_CASE("phase_report reads boundaries off a synthetic series") {
  // lambda_min grows linearly; alignment and ratio bands start failing, then
  // hold from specific rounds onward.
  std::vector<PhaseSnapshot> series;
  const double beta = 4.0;
  for (long long t = 1; t <= 1000; t *= 2) {
    PhaseSnapshot snap;
    snap.t = t;
    snap.lambda_min = static_cast<double>(t);
    snap.lambda_top = static_cast<double>(t) * 2.0;
    snap.lambda_bar = static_cast<double>(t) * 1.5;
    snap.align_star = (t >= 64) ? 0.0 : 10.0;
    snap.ratio_2d = (t >= 256) ? 1.0 : 100.0;
    snap.plain_err = std::pow(static_cast<double>(t), -0.25);
    snap.weighted_err = 1.0;
    series.push_back(snap);
  }
  const auto report = linucb::phase_report(series, beta, 1.0, 2, 5.0, 5.0);
  REQUIRE(report.t1 == 16);  // first t with beta/sqrt(t) <= 1
  REQUIRE(report.t2 == 64);
  REQUIRE(report.t3 == 256);
  REQUIRE(report.lambda_min_slope.slope == Approx(1.0).margin(1e-9));
  REQUIRE(report.plain_err_slope.slope == Approx(-0.25).margin(1e-9));
  REQUIRE(report.weighted_err_max == Approx(1.0));
}
