#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace linucb {

namespace detail {

// Lower regularized incomplete gamma by power series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
  const double log_gamma_a = std::lgamma(a);
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * std::numeric_limits<double>::epsilon()) {
      break;
    }
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
}

// Upper regularized incomplete gamma by modified Lentz continued fraction;
// valid for x >= a + 1.
inline double gamma_q_contfrac(double a, double x) {
  const double log_gamma_a = std::lgamma(a);
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < std::numeric_limits<double>::epsilon()) break;
  }
  return h * std::exp(-x + a * std::log(x) - log_gamma_a);
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("gamma_p: a must be positive");
  if (x < 0.0) throw std::invalid_argument("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

// Chi-squared CDF with k degrees of freedom.
inline double chi2_cdf(int k, double x) {
  if (k < 1) throw std::invalid_argument("chi2_cdf: k must be >= 1");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * k, 0.5 * x);
}

// Quantile of the chi-squared distribution: the q with P(k/2, q/2) = p.
// Bracketing bisection refined until the bracket collapses; the result
// inverts the CDF well inside the 1e-10 contract.
inline double chi2_quantile(int k, double p) {
  if (k < 1) throw std::invalid_argument("chi2_quantile: k must be >= 1");
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("chi2_quantile: p must lie in (0, 1)");
  }
  double lo = 0.0;
  double hi = k + 10.0 * std::sqrt(2.0 * k) + 10.0;
  while (chi2_cdf(k, hi) < p) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (chi2_cdf(k, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Standard normal CDF.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Survival function of the Kolmogorov distribution,
//   Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2),
// with the dual theta-series used for small x where the sum above converges
// slowly.
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    const double t = std::exp(-M_PI * M_PI / (8.0 * x * x));
    const double cdf = std::sqrt(2.0 * M_PI) / x *
                       (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
    return std::min(1.0, std::max(0.0, 1.0 - cdf));
  }
  const double t = std::exp(-2.0 * x * x);
  double sf = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::pow(t, static_cast<double>(j) * j);
    sf += sign * term;
    sign = -sign;
    if (term < 1e-300) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sf));
}

}  // namespace linucb
