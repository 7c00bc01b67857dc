#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linucb/eigencore.hpp"
#include "linucb/rng.hpp"

namespace linucb {

enum class NoiseKind { gaussian, rademacher, uniform };

inline std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::rademacher: return "rademacher";
    case NoiseKind::uniform: return "uniform";
  }
  return "gaussian";
}

inline NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "rademacher") return NoiseKind::rademacher;
  if (name == "uniform") return NoiseKind::uniform;
  throw std::invalid_argument("unknown noise kind: " + name);
}

// beta = sigma*sqrt(d*log(1 + T L^2/d) + 2 log(1/delta)) + 1, the standard
// optimism-valid schedule.
inline double beta_theoretical(double sigma, int d, double horizon, double l_bound,
                               double delta) {
  if (sigma < 0.0 || d < 2 || horizon < 1.0 || l_bound <= 0.0) {
    throw std::invalid_argument("beta_theoretical: invalid inputs");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("beta_theoretical: delta must lie in (0, 1)");
  }
  const double inside =
      d * std::log(1.0 + horizon * l_bound * l_bound / d) + 2.0 * std::log(1.0 / delta);
  return sigma * std::sqrt(inside) + 1.0;
}

// beta = c * d^2 * (sigma*sqrt(d + log log T) + 1); with c around one this
// sits at the scale the stability analysis asks the exploration bonus to
// dominate.
inline double beta_stability(double sigma, int d, double horizon, double c) {
  if (c <= 0.0) throw std::invalid_argument("beta_stability: c must be positive");
  if (horizon < 3.0) throw std::invalid_argument("beta_stability: need T >= 3");
  if (sigma < 0.0 || d < 2) throw std::invalid_argument("beta_stability: invalid inputs");
  return c * d * d * (sigma * std::sqrt(d + std::log(std::log(horizon))) + 1.0);
}

struct BetaSchedule {
  enum class Mode { constant, theory, stability };

  Mode mode = Mode::theory;
  double value = 1.0;   // constant mode
  double delta = 0.01;  // theory mode
  double l_bound = 1.0; // theory mode
  double c = 1.0;       // stability mode

  double evaluate(double sigma, int d, double horizon) const {
    switch (mode) {
      case Mode::constant:
        if (value < 0.0) throw std::invalid_argument("constant beta must be >= 0");
        return value;
      case Mode::theory:
        return beta_theoretical(sigma, d, horizon, l_bound, delta);
      case Mode::stability:
        return beta_stability(sigma, d, horizon, c);
    }
    return value;
  }
};

inline std::string to_string(BetaSchedule::Mode mode) {
  switch (mode) {
    case BetaSchedule::Mode::constant: return "constant";
    case BetaSchedule::Mode::theory: return "theory";
    case BetaSchedule::Mode::stability: return "stability";
  }
  return "theory";
}

inline BetaSchedule::Mode beta_mode_from_string(const std::string& name) {
  if (name == "constant") return BetaSchedule::Mode::constant;
  if (name == "theory") return BetaSchedule::Mode::theory;
  if (name == "stability") return BetaSchedule::Mode::stability;
  throw std::invalid_argument("unknown beta mode: " + name);
}

struct BanditConfig {
  int d = 2;
  long long horizon = 10000;
  double sigma = 1.0;
  BetaSchedule beta;
  double ridge = 1.0;
  Vector theta_star;  // unit norm; defaults to e_1 when empty
  NoiseKind noise = NoiseKind::gaussian;
  std::uint64_t base_seed = 0;
  long long refactor_period = 1000;
  // Diagnostics recording: 0 = geometric grid ceil(1.1^k), n > 0 = every n
  // rounds; the final round is always recorded.
  long long snapshot_stride = 0;
  // Test hook: replaces the seeded random direction used for theta_hat at
  // t = 0.
  std::optional<Vector> theta_hat0;

  void validate() const {
    if (d < 2) throw std::invalid_argument("config: d must be >= 2");
    if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
    // sigma = 0 gives the noise-free diagnostic run; negative is meaningless.
    if (sigma < 0.0) throw std::invalid_argument("config: sigma must be >= 0");
    if (ridge <= 0.0) throw std::invalid_argument("config: ridge must be > 0");
    if (refactor_period < 1) {
      throw std::invalid_argument("config: refactor_period must be >= 1");
    }
    if (snapshot_stride < 0) {
      throw std::invalid_argument("config: stride must be >= 0");
    }
    if (theta_star.size() != d) {
      throw std::invalid_argument("config: theta_star must have length d");
    }
    if (std::abs(theta_star.norm() - 1.0) > 1e-10) {
      throw std::invalid_argument("config: theta_star must be unit norm");
    }
    if (theta_hat0 && (theta_hat0->size() != d ||
                       std::abs(theta_hat0->norm() - 1.0) > 1e-10)) {
      throw std::invalid_argument("config: theta_hat0 override must be a unit d-vector");
    }
  }

  double beta_value() const {
    return beta.evaluate(sigma, d, static_cast<double>(horizon));
  }

  static Vector default_theta_star(int d) {
    Vector v = Vector::Zero(d);
    v[0] = 1.0;
    return v;
  }
};

// Design covariance Lambda_t = ridge*I + sum_s a_s a_s^T together with its
// maintained eigendecomposition.
struct CovarianceState {
  long long t = 0;
  Matrix lambda_matrix;
  EigenPairs pairs;
  long long updates_since_refactor = 0;
};

struct EstimatorState {
  Vector b_vec;       // sum_s a_s r_s
  Vector theta_bar;   // ridge solution
  Vector theta_hat;   // projection of theta_bar onto the sphere
  Vector eta_oracle;  // sum_s a_s eps_s (simulation-only)
};

// The chosen action expressed in the eigenbasis of Lambda.
struct ActionDecomposition {
  Vector action;   // a_t, unit norm
  Vector w_opt;    // inner maximizer over the unit sphere
  Vector kappa;    // <v_i, a_t>
  Vector nu;       // <v_i, theta_hat>
  double alpha = 0.0;    // <a_t, theta_hat>
  double xi_norm = 0.0;  // ||a_t - alpha*theta_hat||
  double ucb_value = 0.0;
  bool fallback = false;  // true when the closed form failed and gradient
                          // ascent produced the action
};

struct RoundEntry {
  Vector action;
  double reward = 0.0;
  double noise = 0.0;
};

inline std::pair<CovarianceState, EstimatorState> init_state(const BanditConfig& config,
                                                             Rng& rng) {
  config.validate();
  CovarianceState cov;
  cov.t = 0;
  cov.lambda_matrix = config.ridge * Matrix::Identity(config.d, config.d);
  cov.pairs.values = Vector::Constant(config.d, config.ridge);
  cov.pairs.vectors = Matrix::Identity(config.d, config.d);
  cov.updates_since_refactor = 0;

  EstimatorState est;
  est.b_vec = Vector::Zero(config.d);
  est.theta_bar = Vector::Zero(config.d);
  est.theta_hat = config.theta_hat0 ? *config.theta_hat0
                                    : project_sphere(est.theta_bar, rng);
  est.eta_oracle = Vector::Zero(config.d);
  return {std::move(cov), std::move(est)};
}

// Ridge solution through the maintained eigendecomposition:
// theta_bar = sum_i <v_i, b>/lambda_i * v_i.
inline Vector ridge_estimate(const CovarianceState& cov, const Vector& b_vec) {
  const Vector coords = cov.pairs.vectors.transpose() * b_vec;
  return cov.pairs.vectors * (coords.array() / cov.pairs.values.array()).matrix();
}

// UCB_t(a) = <a, theta_hat> + beta * sqrt(a^T Lambda^{-1} a).
inline double ucb_score(const CovarianceState& cov, const Vector& theta_hat,
                        double beta, const Vector& a) {
  if (std::abs(a.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("ucb_score: action must be unit norm");
  }
  const Vector coords = cov.pairs.vectors.transpose() * a;
  const double bonus2 = (coords.array().square() / cov.pairs.values.array()).sum();
  return a.dot(theta_hat) + beta * std::sqrt(bonus2);
}

namespace detail {

// Projected gradient ascent of sum_i (nu_i + s_i w_i)^2 over the unit sphere
// from several seeded starts; used only when the closed-form solve reports
// failure.
inline Vector sphere_quadratic_ascent(const Vector& nu, const Vector& s,
                                      std::uint64_t seed) {
  const Eigen::Index d = nu.size();
  const Vector b = s.cwiseProduct(nu);
  const double step = 1.0 / (2.0 * s.cwiseAbs2().maxCoeff() + 1.0);
  Rng rng(seed);
  Vector best = Vector::Zero(d);
  double best_obj = -1.0;
  for (int start = 0; start < 8; ++start) {
    Vector w = rng.unit_vector(d);
    for (int iter = 0; iter < 2000; ++iter) {
      const Vector grad = 2.0 * (b + s.cwiseAbs2().cwiseProduct(w));
      Vector next = w + step * grad;
      const double norm = next.norm();
      if (norm < 1e-300) break;
      next /= norm;
      if ((next - w).norm() < 1e-14) {
        w = next;
        break;
      }
      w = next;
    }
    const double obj = (nu + s.cwiseProduct(w)).squaredNorm();
    if (obj > best_obj) {
      best_obj = obj;
      best = w;
    }
  }
  return best;
}

// Maximize sum_i (nu_i + s_i w_i)^2 over ||w|| = 1 via the stationarity
// system w_i = b_i / (mu - s_i^2), b_i = s_i nu_i, with mu the root of
// sum (b_i/(mu - s_i^2))^2 = 1 above max s_i^2.
//
// Coordinates sharing an eigenvalue (s equal within the grouping of the
// caller) are aggregated and the solved weight is redistributed inside the
// group proportionally to nu. When the aggregated weight on the minimal
// eigenvalue group vanishes and the remaining coordinates cannot fill the
// sphere on their own, mu sits exactly at max s_i^2 and the leftover mass
// goes to the first coordinate of that group (the trust-region hard case).
inline Vector kkt_sphere_maximizer(const Vector& nu, const Vector& s) {
  const Eigen::Index d = nu.size();

  // Group indices with equal s (equal lambda). s is non-decreasing because
  // lambda is sorted non-increasing.
  std::vector<Eigen::Index> group_start;
  group_start.push_back(0);
  for (Eigen::Index i = 1; i < d; ++i) {
    if (s[i] - s[i - 1] > 1e-12 * std::max(s[i], 1e-300)) group_start.push_back(i);
  }
  group_start.push_back(d);
  const std::size_t n_groups = group_start.size() - 1;

  std::vector<double> s2(n_groups), bagg2(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    const Eigen::Index begin = group_start[g];
    const Eigen::Index size = group_start[g + 1] - begin;
    const double sg = s[begin];
    s2[g] = sg * sg;
    bagg2[g] = sg * sg * nu.segment(begin, size).squaredNorm();
  }
  const std::size_t last = n_groups - 1;  // minimal eigenvalue group
  const double s2_max = s2[last];

  const auto residual = [&](double mu, bool include_last) {
    double sum = 0.0;
    for (std::size_t g = 0; g < n_groups; ++g) {
      if (!include_last && g == last) continue;
      const double denom = mu - s2[g];
      sum += bagg2[g] / (denom * denom);
    }
    return sum - 1.0;
  };

  const bool last_degenerate = std::sqrt(bagg2[last]) < 1e-12;
  bool hard_case = false;
  double mu = s2_max;
  if (last_degenerate && residual(s2_max, false) <= 0.0) {
    hard_case = true;
  } else {
    // Root of residual(mu) = 0 on (s2_max, s2_max + ||b||]; the function is
    // strictly decreasing there.
    const double total_b = std::sqrt(
        std::accumulate(bagg2.begin(), bagg2.end(), 0.0));
    double lo = 0.0;  // offset above s2_max
    double hi = total_b;
    const bool include_last = !last_degenerate;
    if (!include_last) {
      // Residual stays finite at the bottom; expand upward from the bracket
      // guaranteed by residual(s2_max) > 0.
      hi = total_b + s2_max + 1.0;
    }
    const auto h = [&](double offset) { return residual(s2_max + offset, include_last); };
    while (h(hi) > 0.0) hi *= 2.0;
    double offset = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
      const double value = h(offset);
      if (value > 0.0) {
        lo = offset;
      } else {
        hi = offset;
      }
      // Newton step on the offset, clipped to the bracket.
      double deriv = 0.0;
      for (std::size_t g = 0; g < n_groups; ++g) {
        if (!include_last && g == last) continue;
        const double denom = (s2_max - s2[g]) + offset;
        deriv += -2.0 * bagg2[g] / (denom * denom * denom);
      }
      double next = offset - value / deriv;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double change = std::abs(next - offset);
      offset = next;
      if (change <= 1e-14 * (s2_max + offset) || hi - lo <= 1e-16 * (s2_max + hi)) {
        break;
      }
      if (iter == 199) throw SecularError("kkt root finder failed to converge");
    }
    mu = s2_max + offset;
  }

  Vector w = Vector::Zero(d);
  double used = 0.0;
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (hard_case && g == last) continue;
    const double denom = mu - s2[g];
    if (denom <= 0.0) continue;
    const double wg = std::sqrt(bagg2[g]) / denom;
    used += wg * wg;
    const Eigen::Index begin = group_start[g];
    const Eigen::Index size = group_start[g + 1] - begin;
    const double group_nu_norm = nu.segment(begin, size).norm();
    if (group_nu_norm > 0.0) {
      w.segment(begin, size) = (wg / group_nu_norm) * nu.segment(begin, size);
    }
  }
  if (hard_case) {
    w[group_start[last]] = std::sqrt(std::max(0.0, 1.0 - used));
  }
  const double norm = w.norm();
  if (norm > 0.0) w /= norm;
  return w;
}

}  // namespace detail

// One LinUCB action: a_t = P(theta_hat + beta * Lambda^{-1/2} w_t) with w_t
// the sphere maximizer of ||theta_hat + beta * Lambda^{-1/2} w||.
inline ActionDecomposition select_action(const CovarianceState& cov,
                                         const Vector& theta_hat, double beta) {
  if (beta < 0.0) throw std::invalid_argument("select_action: beta must be >= 0");
  const Eigen::Index d = cov.pairs.dim();

  ActionDecomposition out;
  out.nu = cov.pairs.vectors.transpose() * theta_hat;

  Vector s(d);
  for (Eigen::Index i = 0; i < d; ++i) s[i] = beta / std::sqrt(cov.pairs.values[i]);

  if (beta == 0.0) {
    out.w_opt = out.nu;
  } else {
    try {
      out.w_opt = detail::kkt_sphere_maximizer(out.nu, s);
    } catch (const SecularError&) {
      out.w_opt = detail::sphere_quadratic_ascent(
          out.nu, s, 0x5e1ec7ac710full ^ static_cast<std::uint64_t>(cov.t));
      out.fallback = true;
    }
  }

  Vector y = out.nu + s.cwiseProduct(out.w_opt);
  const double y_norm = y.norm();
  out.kappa = y / y_norm;
  out.action = cov.pairs.vectors * out.kappa;
  out.alpha = out.kappa.dot(out.nu);
  out.xi_norm = (out.kappa - out.alpha * out.nu).norm();
  out.ucb_value = out.alpha +
                  beta * std::sqrt((out.kappa.array().square() /
                                    cov.pairs.values.array()).sum());
  return out;
}

struct RewardDraw {
  double reward = 0.0;
  double noise = 0.0;
};

// r = <a, theta_star> + eps with eps mean zero, variance sigma^2 and
// sigma-sub-Gaussian for every supported kind.
inline RewardDraw sample_reward(const Vector& a, const Vector& theta_star,
                                double sigma, NoiseKind kind, Rng& rng) {
  double eps = 0.0;
  switch (kind) {
    case NoiseKind::gaussian:
      eps = sigma * rng.gaussian();
      break;
    case NoiseKind::rademacher:
      eps = (rng.next_u64() >> 63) ? sigma : -sigma;
      break;
    case NoiseKind::uniform:
      eps = sigma * std::sqrt(3.0) * (2.0 * rng.uniform01() - 1.0);
      break;
  }
  return {a.dot(theta_star) + eps, eps};
}

struct StepResult {
  ActionDecomposition decomposition;
  double reward = 0.0;
  double noise = 0.0;
};

// One round of Algorithm-style play: select, observe, update covariance and
// estimator. The eigendecomposition advances by the secular rank-one update
// and is re-factorized from scratch every refactor_period rounds (or when
// the secular solver gives up).
inline StepResult step(CovarianceState& cov, EstimatorState& est,
                       const BanditConfig& config, double beta, Rng& rng) {
  if (cov.t >= config.horizon) {
    throw std::logic_error("step: trial horizon already reached");
  }
  StepResult result;
  result.decomposition = select_action(cov, est.theta_hat, beta);
  const Vector& a = result.decomposition.action;

  const RewardDraw draw =
      sample_reward(a, config.theta_star, config.sigma, config.noise, rng);
  result.reward = draw.reward;
  result.noise = draw.noise;

  cov.lambda_matrix += a * a.transpose();
  bool refactored = false;
  try {
    cov.pairs = rank_one_update(cov.pairs, a);
  } catch (const SecularError&) {
    cov.pairs = eig_sym(cov.lambda_matrix);
    refactored = true;
  }
  cov.t += 1;
  cov.updates_since_refactor = refactored ? 0 : cov.updates_since_refactor + 1;
  if (cov.updates_since_refactor >= config.refactor_period) {
    cov.pairs = eig_sym(cov.lambda_matrix);
    cov.updates_since_refactor = 0;
  }

  est.b_vec += a * result.reward;
  est.eta_oracle += a * result.noise;
  est.theta_bar = ridge_estimate(cov, est.b_vec);
  est.theta_hat = project_sphere(est.theta_bar, rng);
  return result;
}

// R_T = sum_t (1 - <a_t, theta_star>): on the unit ball the best action is
// theta_star itself with expected reward one.
inline double regret(const std::vector<RoundEntry>& rounds, const Vector& theta_star) {
  double total = 0.0;
  for (const RoundEntry& round : rounds) {
    total += 1.0 - round.action.dot(theta_star);
  }
  return total;
}

}  // namespace linucb
