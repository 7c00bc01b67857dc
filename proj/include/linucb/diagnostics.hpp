#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "linucb/bandit.hpp"

namespace linucb {

// Deterministic spectral benchmark sqrt(2 beta^2 t / (d+1)); the same value
// serves as the effective sample size of the design at round t.
struct EigenBenchmark {
  double lambda_star = 0.0;
  double n_eff = 0.0;
};

inline EigenBenchmark eigen_benchmark(double beta, double t, int d) {
  if (d < 2) throw std::invalid_argument("eigen_benchmark: d must be >= 2");
  if (beta <= 0.0 || t <= 0.0) {
    throw std::invalid_argument("eigen_benchmark: beta and t must be positive");
  }
  const double value = std::sqrt(2.0 * beta * beta * t / (d + 1));
  return {value, value};
}

// Read-only per-round observables of the covariance spectrum and estimator.
struct PhaseSnapshot {
  long long t = 0;
  double lambda_min = 0.0;
  double lambda_bar = 0.0;   // mean of the non-leading eigenvalues
  double lambda_top = 0.0;
  double c_t = 0.0;          // lambda_min / (beta sqrt(t)); 0 at t = 0
  double benchmark = 0.0;    // sqrt(2 beta^2 t/(d+1)); 0 at t = 0
  Vector delta_i;            // lambda_i / benchmark - 1 for i >= 2
  double align_star = 0.0;   // sign-invariant distance of v_1 to theta_star
  double align_hat = 0.0;    // sign-invariant distance of v_1 to theta_hat
  double ratio_2d = 0.0;     // lambda_2 / lambda_d
  double weighted_err = 0.0; // ||theta_bar - theta_star||_Lambda
  double plain_err = 0.0;    // ||theta_bar - theta_star||_2
};

namespace detail {

// Eigenvectors are defined up to sign; measure the distance to the closer of
// the two representatives.
inline double sign_invariant_distance(const Vector& v, const Vector& target) {
  return std::min((v - target).norm(), (v + target).norm());
}

}  // namespace detail

inline PhaseSnapshot phase_snapshot(const CovarianceState& cov,
                                    const EstimatorState& est,
                                    const Vector& theta_star, double beta) {
  const Eigen::Index d = cov.pairs.dim();
  PhaseSnapshot snap;
  snap.t = cov.t;
  snap.lambda_min = cov.pairs.values[d - 1];
  snap.lambda_top = cov.pairs.values[0];
  snap.lambda_bar = cov.pairs.values.tail(d - 1).mean();
  snap.ratio_2d = cov.pairs.values[1] / cov.pairs.values[d - 1];

  snap.delta_i = Vector::Zero(d - 1);
  if (cov.t > 0 && beta > 0.0) {
    snap.c_t = snap.lambda_min / (beta * std::sqrt(static_cast<double>(cov.t)));
    snap.benchmark =
        eigen_benchmark(beta, static_cast<double>(cov.t), static_cast<int>(d))
            .lambda_star;
    for (Eigen::Index i = 1; i < d; ++i) {
      snap.delta_i[i - 1] = cov.pairs.values[i] / snap.benchmark - 1.0;
    }
  }

  snap.align_star = detail::sign_invariant_distance(cov.pairs.vectors.col(0), theta_star);
  snap.align_hat = detail::sign_invariant_distance(cov.pairs.vectors.col(0), est.theta_hat);

  const Vector err = est.theta_bar - theta_star;
  snap.plain_err = err.norm();
  const Vector coords = cov.pairs.vectors.transpose() * err;
  snap.weighted_err =
      std::sqrt((coords.array().square() * cov.pairs.values.array()).sum());
  return snap;
}

inline double weighted_error_max(const std::vector<PhaseSnapshot>& series) {
  if (series.empty()) {
    throw std::invalid_argument("weighted_error_max: series must be non-empty");
  }
  double best = 0.0;
  for (const PhaseSnapshot& snap : series) best = std::max(best, snap.weighted_err);
  return best;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of log(value) against log(t).
inline SlopeFit slope_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) {
    throw std::invalid_argument("slope_fit: need at least two points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [t, value] : points) {
    if (t <= 0.0 || value <= 0.0) {
      throw std::invalid_argument("slope_fit: coordinates must be positive");
    }
    const double x = std::log(t);
    const double y = std::log(value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  const double denom = n * sxx - sx * sx;
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

// Limiting arm-pull counts of UCB in the K-armed bandit: the n*_a with
// mu_a + beta/sqrt(n*_a) equal across arms and summing to T. Solved by
// monotone bisection on the common level, polished with Newton steps.
inline std::vector<double> mab_balance(const std::vector<double>& mu, double beta,
                                       double horizon) {
  const std::size_t k = mu.size();
  if (k < 2) throw std::invalid_argument("mab_balance: need K >= 2 arms");
  if (beta <= 0.0) throw std::invalid_argument("mab_balance: beta must be positive");
  if (horizon < static_cast<double>(k)) {
    throw std::invalid_argument("mab_balance: need T >= K");
  }

  const double mu_max = *std::max_element(mu.begin(), mu.end());
  const bool symmetric = std::all_of(mu.begin(), mu.end(),
                                     [&](double m) { return m == mu[0]; });
  if (symmetric) return std::vector<double>(k, horizon / static_cast<double>(k));

  const auto pulls_at = [&](double level) {
    std::vector<double> n(k);
    for (std::size_t a = 0; a < k; ++a) {
      const double width = level - mu[a];
      n[a] = (beta / width) * (beta / width);
    }
    return n;
  };
  const auto total_at = [&](double level) {
    double sum = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const double width = level - mu[a];
      sum += (beta / width) * (beta / width);
    }
    return sum;
  };

  double lo = mu_max;
  double hi = mu_max + beta * std::sqrt(static_cast<double>(k) / horizon) + beta;
  for (int iter = 0; iter < 500; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (total_at(mid) > horizon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double level = 0.5 * (lo + hi);
  for (int polish = 0; polish < 4; ++polish) {
    double total = 0.0, deriv = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const double width = level - mu[a];
      const double n = (beta / width) * (beta / width);
      total += n;
      deriv += -2.0 * n / width;
    }
    const double next = level - (total - horizon) / deriv;
    if (next > lo && next < hi + (hi - lo)) level = next;
  }

  std::vector<double> counts = pulls_at(level);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (std::abs(total - horizon) > 1e-6) {
    throw std::runtime_error("mab_balance: bisection failed to meet the sum constraint");
  }
  return counts;
}

// Ratio of the run's beta to the stability scale d^2(sigma*sqrt(d+loglogT)+1).
struct StabilityReport {
  double ratio = 0.0;
  bool satisfied = false;
};

inline StabilityReport stability_check(double beta, double sigma, int d,
                                       double horizon) {
  const double threshold = beta_stability(sigma, d, horizon, 1.0);
  StabilityReport report;
  report.ratio = beta / threshold;
  report.satisfied = report.ratio > 1.0;
  return report;
}

// Phase boundaries read off a recorded snapshot series.
//
// t1 is the first recorded round with beta/sqrt(lambda_min) <= 1 (the bonus
// stops dominating). t2 and t3 are the first recorded rounds from which the
// alignment band
//   align_star <= band_align * (sigma*sqrt(d+loglogT)+1)/sqrt(lambda_min)
// respectively the eigenvalue-ratio band
//   ratio_2d <= 1 + band_ratio * d * (sigma*sqrt(d+loglogT)+1)/beta
// hold at every later recorded round. Absent boundaries report -1.
struct PhaseReport {
  long long t1 = -1;
  long long t2 = -1;
  long long t3 = -1;
  SlopeFit lambda_min_slope;  // log-log, last decade of recorded rounds
  SlopeFit plain_err_slope;
  double weighted_err_max = 0.0;
  StabilityReport stability;
};

inline PhaseReport phase_report(const std::vector<PhaseSnapshot>& series,
                                double beta, double sigma, int d,
                                double band_align, double band_ratio) {
  if (series.empty()) {
    throw std::invalid_argument("phase_report: series must be non-empty");
  }
  PhaseReport report;
  const double horizon = static_cast<double>(series.back().t);
  const double noise_scale =
      sigma * std::sqrt(d + std::log(std::log(std::max(horizon, 3.0)))) + 1.0;

  for (const PhaseSnapshot& snap : series) {
    if (snap.t >= 1 && beta / std::sqrt(snap.lambda_min) <= 1.0) {
      report.t1 = snap.t;
      break;
    }
  }

  const auto holds_align = [&](const PhaseSnapshot& snap) {
    return snap.align_star <= band_align * noise_scale / std::sqrt(snap.lambda_min);
  };
  const auto holds_ratio = [&](const PhaseSnapshot& snap) {
    return snap.ratio_2d <= 1.0 + band_ratio * d * noise_scale / beta;
  };
  bool align_ok = true;
  bool ratio_ok = true;
  for (auto it = series.rbegin(); it != series.rend(); ++it) {
    if (it->t < 1) break;
    align_ok = align_ok && holds_align(*it);
    ratio_ok = ratio_ok && holds_ratio(*it);
    if (align_ok) report.t2 = it->t;
    if (ratio_ok) report.t3 = it->t;
    if (!align_ok && !ratio_ok) break;
  }

  std::vector<std::pair<double, double>> lambda_points, err_points;
  for (const PhaseSnapshot& snap : series) {
    const auto t = static_cast<double>(snap.t);
    if (t < horizon / 10.0 || t <= 0.0) continue;
    if (snap.lambda_min > 0.0) lambda_points.emplace_back(t, snap.lambda_min);
    if (snap.plain_err > 0.0) err_points.emplace_back(t, snap.plain_err);
  }
  if (lambda_points.size() >= 2) report.lambda_min_slope = slope_fit(lambda_points);
  if (err_points.size() >= 2) report.plain_err_slope = slope_fit(err_points);

  report.weighted_err_max = weighted_error_max(series);
  report.stability = stability_check(beta, sigma, d, std::max(horizon, 3.0));
  return report;
}

}  // namespace linucb
