#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "linucb/bandit.hpp"
#include "linucb/diagnostics.hpp"
#include "linucb/inference.hpp"

namespace linucb {

struct HarnessOptions {
  long long n_trials = 1;
  int workers = 0;  // 0 = hardware concurrency
  double delta = 0.1;
  long long trial_offset = 0;
  // Band constants for the phase-boundary report; the theory fixes only the
  // scale of each bound, so the factors are configuration.
  double band_align = 5.0;
  double band_ratio = 5.0;
};

struct SnapshotRow {
  PhaseSnapshot snap;
  double regret_so_far = 0.0;
};

struct TrialRecord {
  BanditConfig config;
  long long trial_index = 0;
  std::vector<RoundEntry> rounds;
  CovarianceState cov;  // terminal state
  EstimatorState est;   // terminal state
  double regret = 0.0;
  std::vector<SnapshotRow> snapshots;
  bool used_fallback = false;
};

// Rounds at which diagnostics are recorded: ceil(1.1^k) deduplicated for
// stride 0, every `stride` rounds otherwise; the final round always included.
inline std::vector<long long> snapshot_grid(long long horizon, long long stride) {
  std::vector<long long> grid;
  if (stride > 0) {
    for (long long t = stride; t < horizon; t += stride) grid.push_back(t);
  } else {
    double x = 1.0;
    long long prev = 0;
    while (true) {
      const auto t = static_cast<long long>(std::ceil(x));
      if (t >= horizon) break;
      if (t != prev) grid.push_back(t);
      prev = t;
      x *= 1.1;
    }
  }
  grid.push_back(horizon);
  return grid;
}

// One complete trial, bit-reproducible given (base_seed, trial_index): the
// trial generator is xoshiro256++ seeded through splitmix64 from
// base_seed XOR trial_index.
inline TrialRecord run_trial(const BanditConfig& config, long long trial_index) {
  config.validate();
  TrialRecord record;
  record.config = config;
  record.trial_index = trial_index;

  Rng rng(config.base_seed ^ static_cast<std::uint64_t>(trial_index));
  auto [cov, est] = init_state(config, rng);
  const double beta = config.beta_value();
  const std::vector<long long> grid =
      snapshot_grid(config.horizon, config.snapshot_stride);
  std::size_t grid_pos = 0;

  record.rounds.reserve(static_cast<std::size_t>(config.horizon));
  double regret_sum = 0.0;
  for (long long t = 1; t <= config.horizon; ++t) {
    StepResult result = step(cov, est, config, beta, rng);
    regret_sum += 1.0 - result.decomposition.action.dot(config.theta_star);
    record.used_fallback = record.used_fallback || result.decomposition.fallback;
    record.rounds.push_back(
        {std::move(result.decomposition.action), result.reward, result.noise});
    if (grid_pos < grid.size() && cov.t == grid[grid_pos]) {
      record.snapshots.push_back(
          {phase_snapshot(cov, est, config.theta_star, beta), regret_sum});
      ++grid_pos;
    }
  }
  record.cov = std::move(cov);
  record.est = std::move(est);
  record.regret = regret_sum;
  return record;
}

// Per-trial quantities kept for aggregation; everything downstream of the
// Monte Carlo loop is computed from these.
struct TrialReduction {
  long long trial_index = 0;
  double sigma2_hat = 0.0;
  Vector clt_stat;          // length d-1, not studentized
  bool covered_spherical = false;
  bool covered_ellipsoidal = false;
  Vector eigen_ratio;       // lambda_{T,i}/lambda*_T for i >= 2
  Vector eigen_over_min;    // lambda_{T,i}/lambda_{T,d} for i >= 2
  double regret = 0.0;
  std::vector<SnapshotRow> snapshots;
  bool used_fallback = false;
};

inline TrialReduction reduce_trial(const TrialRecord& record, double delta) {
  const BanditConfig& config = record.config;
  const double beta = config.beta_value();
  const auto horizon = static_cast<double>(config.horizon);

  TrialReduction red;
  red.trial_index = record.trial_index;
  red.sigma2_hat = estimate_noise_variance(record.rounds, record.est.theta_hat);
  red.clt_stat = clt_statistic(record.est.theta_hat, config.theta_star, beta,
                               horizon, config.d)
                     .statistic;

  const ConfidenceSet spherical = confidence_set_spherical(
      record.est.theta_hat, red.sigma2_hat, beta, horizon, config.d, delta);
  const ConfidenceSet ellipsoidal = confidence_set_ellipsoidal(
      record.est.theta_hat, record.cov.lambda_matrix, red.sigma2_hat, delta);
  red.covered_spherical = contains(spherical, config.theta_star);
  red.covered_ellipsoidal = contains(ellipsoidal, config.theta_star);

  const double benchmark = eigen_benchmark(beta, horizon, config.d).lambda_star;
  red.eigen_ratio.resize(config.d - 1);
  red.eigen_over_min.resize(config.d - 1);
  const Vector& values = record.cov.pairs.values;
  for (int i = 1; i < config.d; ++i) {
    red.eigen_ratio[i - 1] = values[i] / benchmark;
    red.eigen_over_min[i - 1] = values[i] / values[config.d - 1];
  }
  red.regret = record.regret;
  red.snapshots = record.snapshots;
  red.used_fallback = record.used_fallback;
  return red;
}

// Runs trials trial_offset .. trial_offset + n_trials - 1, possibly across
// worker threads. Results come back ordered by trial index no matter how the
// work was scheduled.
inline std::vector<TrialReduction> run_reductions(const BanditConfig& config,
                                                  const HarnessOptions& options) {
  if (options.n_trials < 1) {
    throw std::invalid_argument("run_reductions: need at least one trial");
  }
  const auto n = static_cast<std::size_t>(options.n_trials);
  std::vector<TrialReduction> reductions(n);

  unsigned workers = options.workers > 0
                         ? static_cast<unsigned>(options.workers)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

  std::atomic<std::size_t> cursor{0};
  const auto work = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      const long long index = options.trial_offset + static_cast<long long>(i);
      reductions[i] = reduce_trial(run_trial(config, index), options.delta);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& thread : pool) thread.join();
  }
  return reductions;
}

struct McSummary {
  long long n_trials = 0;
  std::vector<double> normality_statistic;  // per CLT coordinate; empty when
  std::vector<double> normality_p_value;    // fewer than 20 trials pooled
  double coverage_spherical = 0.0;
  double coverage_ellipsoidal = 0.0;
  double eigen_ratio_median = 0.0;  // pooled lambda_{T,i}/lambda*_T, i >= 2
  double eigen_ratio_iqr = 0.0;
  double error_slope = 0.0;      // log-log fit of the median plain error over
  double error_intercept = 0.0;  // the last decade of the diagnostic grid
  double mean_regret = 0.0;
  double wall_clock_per_trial_ms = 0.0;  // measured; excluded from export
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

}  // namespace detail

// Deterministic fold of index-sorted reductions into the run summary.
inline McSummary summarize(std::vector<TrialReduction> reductions) {
  if (reductions.empty()) {
    throw std::invalid_argument("summarize: no trials");
  }
  std::sort(reductions.begin(), reductions.end(),
            [](const TrialReduction& a, const TrialReduction& b) {
              return a.trial_index < b.trial_index;
            });
  const std::size_t n = reductions.size();
  const auto coords = static_cast<std::size_t>(reductions.front().clt_stat.size());

  McSummary summary;
  summary.n_trials = static_cast<long long>(n);

  if (n >= 20) {
    for (std::size_t j = 0; j < coords; ++j) {
      std::vector<double> pooled(n);
      for (std::size_t i = 0; i < n; ++i) {
        pooled[i] = reductions[i].clt_stat[static_cast<Eigen::Index>(j)] /
                    std::sqrt(reductions[i].sigma2_hat);
      }
      const NormalityResult result = normality_test(pooled);
      summary.normality_statistic.push_back(result.statistic);
      summary.normality_p_value.push_back(result.p_value);
    }
  }

  std::size_t sph = 0, ell = 0;
  double regret_sum = 0.0;
  std::vector<double> ratios;
  ratios.reserve(n * coords);
  for (const TrialReduction& red : reductions) {
    sph += red.covered_spherical ? 1 : 0;
    ell += red.covered_ellipsoidal ? 1 : 0;
    regret_sum += red.regret;
    for (Eigen::Index i = 0; i < red.eigen_ratio.size(); ++i) {
      ratios.push_back(red.eigen_ratio[i]);
    }
  }
  summary.coverage_spherical = static_cast<double>(sph) / static_cast<double>(n);
  summary.coverage_ellipsoidal = static_cast<double>(ell) / static_cast<double>(n);
  summary.mean_regret = regret_sum / static_cast<double>(n);

  std::sort(ratios.begin(), ratios.end());
  summary.eigen_ratio_median = detail::quantile_sorted(ratios, 0.5);
  summary.eigen_ratio_iqr = detail::quantile_sorted(ratios, 0.75) -
                            detail::quantile_sorted(ratios, 0.25);

  // Median plain error per grid point, fit over the last decade.
  const std::vector<SnapshotRow>& reference = reductions.front().snapshots;
  std::vector<std::pair<double, double>> points;
  if (!reference.empty()) {
    const double t_final = static_cast<double>(reference.back().snap.t);
    for (std::size_t k = 0; k < reference.size(); ++k) {
      const auto t = static_cast<double>(reference[k].snap.t);
      if (t < t_final / 10.0 || t <= 0.0) continue;
      std::vector<double> errs;
      errs.reserve(n);
      for (const TrialReduction& red : reductions) {
        if (k < red.snapshots.size()) errs.push_back(red.snapshots[k].snap.plain_err);
      }
      const double med = detail::median_of(std::move(errs));
      if (med > 0.0) points.emplace_back(t, med);
    }
  }
  if (points.size() >= 2) {
    const SlopeFit fit = slope_fit(points);
    summary.error_slope = fit.slope;
    summary.error_intercept = fit.intercept;
  } else {
    summary.error_slope = std::numeric_limits<double>::quiet_NaN();
    summary.error_intercept = std::numeric_limits<double>::quiet_NaN();
  }
  return summary;
}

inline McSummary run_montecarlo(const BanditConfig& config,
                                const HarnessOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  McSummary summary = summarize(run_reductions(config, options));
  const auto elapsed = std::chrono::duration<double, std::milli>(
      std::chrono::steady_clock::now() - start);
  summary.wall_clock_per_trial_ms =
      elapsed.count() / static_cast<double>(options.n_trials);
  return summary;
}

// ---------------------------------------------------------------------------
// Configuration document
// ---------------------------------------------------------------------------

struct ParsedConfig {
  BanditConfig bandit;
  HarnessOptions harness;
  std::vector<std::string> warnings;
};

// JSON config document. Unknown keys are rejected; theta_star within 1e-6 of
// unit norm is normalized with a warning, anything farther is an error.
inline ParsedConfig parse_config(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.is_object()) {
    throw std::invalid_argument("config: document must be a JSON object");
  }
  static const std::vector<std::string> known = {
      "d",      "horizon",     "sigma",      "beta_mode",  "beta",
      "beta_delta", "beta_L",  "ridge",      "theta_star", "noise",
      "seed",   "refactor_period", "stride", "theta_hat0", "trials",
      "workers", "delta",      "band_align", "band_ratio"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  ParsedConfig parsed;
  BanditConfig& config = parsed.bandit;
  config.d = doc.value("d", 2);
  config.horizon = doc.value("horizon", static_cast<long long>(10000));
  config.sigma = doc.value("sigma", 1.0);
  config.beta.mode = beta_mode_from_string(doc.value("beta_mode", "theory"));
  if (doc.contains("beta")) {
    const double param = doc["beta"].get<double>();
    config.beta.value = param;
    config.beta.c = param;
  }
  config.beta.delta = doc.value("beta_delta", 0.01);
  config.beta.l_bound = doc.value("beta_L", 1.0);
  config.ridge = doc.value("ridge", 1.0);
  config.noise = noise_kind_from_string(doc.value("noise", "gaussian"));
  config.base_seed = doc.value("seed", static_cast<std::uint64_t>(0));
  config.refactor_period = doc.value("refactor_period", static_cast<long long>(1000));
  config.snapshot_stride = doc.value("stride", static_cast<long long>(0));

  if (doc.contains("theta_star")) {
    const auto coords = doc["theta_star"].get<std::vector<double>>();
    Vector theta(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) {
      theta[static_cast<Eigen::Index>(i)] = coords[i];
    }
    const double norm = theta.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
      throw std::invalid_argument("config: theta_star norm differs from 1 by more than 1e-6");
    }
    if (std::abs(norm - 1.0) > 1e-12) {
      parsed.warnings.push_back("theta_star re-normalized onto the unit sphere");
    }
    config.theta_star = theta / norm;
  } else {
    config.theta_star = BanditConfig::default_theta_star(config.d);
  }

  if (doc.contains("theta_hat0")) {
    const auto coords = doc["theta_hat0"].get<std::vector<double>>();
    Vector theta(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) {
      theta[static_cast<Eigen::Index>(i)] = coords[i];
    }
    const double norm = theta.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
      throw std::invalid_argument("config: theta_hat0 norm differs from 1 by more than 1e-6");
    }
    config.theta_hat0 = theta / norm;
  }

  parsed.harness.n_trials = doc.value("trials", static_cast<long long>(1));
  parsed.harness.workers = doc.value("workers", 0);
  parsed.harness.delta = doc.value("delta", 0.1);
  parsed.harness.band_align = doc.value("band_align", 5.0);
  parsed.harness.band_ratio = doc.value("band_ratio", 5.0);

  config.validate();
  if (!(parsed.harness.delta > 0.0 && parsed.harness.delta < 1.0)) {
    throw std::invalid_argument("config: delta must lie in (0, 1)");
  }
  return parsed;
}

inline nlohmann::json config_to_json(const ParsedConfig& parsed) {
  const BanditConfig& config = parsed.bandit;
  nlohmann::json doc;
  doc["d"] = config.d;
  doc["horizon"] = config.horizon;
  doc["sigma"] = config.sigma;
  doc["beta_mode"] = to_string(config.beta.mode);
  doc["beta"] = config.beta.mode == BetaSchedule::Mode::stability ? config.beta.c
                                                                  : config.beta.value;
  doc["beta_delta"] = config.beta.delta;
  doc["beta_L"] = config.beta.l_bound;
  doc["ridge"] = config.ridge;
  doc["theta_star"] = std::vector<double>(config.theta_star.data(),
                                          config.theta_star.data() + config.d);
  if (config.theta_hat0) {
    doc["theta_hat0"] = std::vector<double>(config.theta_hat0->data(),
                                            config.theta_hat0->data() + config.d);
  }
  doc["noise"] = to_string(config.noise);
  doc["seed"] = config.base_seed;
  doc["refactor_period"] = config.refactor_period;
  doc["stride"] = config.snapshot_stride;
  doc["trials"] = parsed.harness.n_trials;
  doc["workers"] = parsed.harness.workers;
  doc["delta"] = parsed.harness.delta;
  doc["band_align"] = parsed.harness.band_align;
  doc["band_ratio"] = parsed.harness.band_ratio;
  return doc;
}

}  // namespace linucb
