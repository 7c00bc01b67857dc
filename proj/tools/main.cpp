// Command-line front end: simulate / montecarlo / diagnose / coverage.
//
// Configuration priority: built-in defaults, then the --config JSON file,
// then explicit flags. Outputs go to --out when given, stdout otherwise.
// Errors print one machine-readable JSON line on stderr and exit nonzero.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "linucb/export.hpp"
#include "linucb/harness.hpp"

namespace {

struct FlagSet {
  std::string config_path;
  std::optional<int> d;
  std::optional<long long> horizon;
  std::optional<double> sigma;
  std::optional<double> beta;
  std::optional<std::string> beta_mode;
  std::optional<long long> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<std::string> noise;
  std::optional<int> workers;
  std::optional<long long> stride;
  std::optional<double> ridge;
  std::optional<long long> refactor_period;
  std::optional<std::string> theta_star;
  std::string out;
};

void add_common_flags(CLI::App* cmd, FlagSet& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--d", flags.d, "Dimension of the action ball");
  cmd->add_option("--horizon", flags.horizon, "Number of rounds T");
  cmd->add_option("--sigma", flags.sigma, "Noise scale");
  cmd->add_option("--beta", flags.beta,
                  "Schedule parameter: the value for constant mode, c for stability");
  cmd->add_option("--beta-mode", flags.beta_mode, "constant | theory | stability");
  cmd->add_option("--trials", flags.trials, "Number of Monte Carlo trials");
  cmd->add_option("--seed", flags.seed, "Base seed");
  cmd->add_option("--delta", flags.delta, "Confidence level parameter");
  cmd->add_option("--noise", flags.noise, "gaussian | rademacher | uniform");
  cmd->add_option("--workers", flags.workers, "Worker threads (0 = auto)");
  cmd->add_option("--stride", flags.stride,
                  "Diagnostics stride (0 = geometric grid)");
  cmd->add_option("--ridge", flags.ridge, "Ridge regularization");
  cmd->add_option("--refactor-period", flags.refactor_period,
                  "Rounds between full re-factorizations");
  cmd->add_option("--theta-star", flags.theta_star,
                  "Comma-separated unit vector, e.g. 0.6,0.8");
  cmd->add_option("--out", flags.out, "Output path (stdout when omitted)");
}

nlohmann::json merged_config_doc(const FlagSet& flags) {
  nlohmann::json doc = nlohmann::json::object();
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw std::runtime_error("cannot read config file: " + flags.config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    doc = nlohmann::json::parse(buffer.str());
  }
  if (flags.d) doc["d"] = *flags.d;
  if (flags.horizon) doc["horizon"] = *flags.horizon;
  if (flags.sigma) doc["sigma"] = *flags.sigma;
  if (flags.beta) doc["beta"] = *flags.beta;
  if (flags.beta_mode) doc["beta_mode"] = *flags.beta_mode;
  if (flags.trials) doc["trials"] = *flags.trials;
  if (flags.seed) doc["seed"] = *flags.seed;
  if (flags.delta) doc["delta"] = *flags.delta;
  if (flags.noise) doc["noise"] = *flags.noise;
  if (flags.workers) doc["workers"] = *flags.workers;
  if (flags.stride) doc["stride"] = *flags.stride;
  if (flags.ridge) doc["ridge"] = *flags.ridge;
  if (flags.refactor_period) doc["refactor_period"] = *flags.refactor_period;
  if (flags.theta_star) {
    std::vector<double> coords;
    std::stringstream list(*flags.theta_star);
    std::string cell;
    while (std::getline(list, cell, ',')) coords.push_back(std::stod(cell));
    doc["theta_star"] = coords;
  }
  return doc;
}

linucb::ParsedConfig load_config(const FlagSet& flags) {
  linucb::ParsedConfig parsed = linucb::parse_config(merged_config_doc(flags).dump());
  for (const std::string& warning : parsed.warnings) {
    std::cerr << "warning: " << warning << '\n';
  }
  return parsed;
}

void emit_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << text;
}

int cmd_simulate(const FlagSet& flags, long long trial_index) {
  const auto parsed = load_config(flags);
  const linucb::TrialRecord record = linucb::run_trial(parsed.bandit, trial_index);
  std::ostringstream csv;
  linucb::write_trial_csv(csv, record.snapshots);
  emit_text(flags.out, csv.str());
  std::cerr << "trial " << trial_index << ": regret=" << record.regret
            << " rounds=" << record.rounds.size()
            << (record.used_fallback ? " (gradient-ascent fallback used)" : "")
            << '\n';
  return 0;
}

int cmd_montecarlo(const FlagSet& flags, const std::string& clt_out) {
  const auto parsed = load_config(flags);
  const auto start = std::chrono::steady_clock::now();
  const auto reductions = linucb::run_reductions(parsed.bandit, parsed.harness);
  linucb::McSummary summary = linucb::summarize(reductions);
  const auto elapsed = std::chrono::duration<double, std::milli>(
      std::chrono::steady_clock::now() - start);
  summary.wall_clock_per_trial_ms =
      elapsed.count() / static_cast<double>(parsed.harness.n_trials);

  emit_text(flags.out, linucb::mc_summary_to_json(summary).dump(2) + "\n");
  if (!clt_out.empty()) {
    std::ofstream out(clt_out);
    if (!out) throw std::runtime_error("cannot open for writing: " + clt_out);
    linucb::write_clt_csv(out, reductions);
  }
  std::cerr << "trials=" << parsed.harness.n_trials
            << " wall_clock_per_trial_ms=" << summary.wall_clock_per_trial_ms << '\n';
  return 0;
}

int cmd_coverage(const FlagSet& flags) {
  const auto parsed = load_config(flags);
  const auto reductions = linucb::run_reductions(parsed.bandit, parsed.harness);
  std::size_t sph = 0, ell = 0;
  for (const auto& red : reductions) {
    sph += red.covered_spherical ? 1 : 0;
    ell += red.covered_ellipsoidal ? 1 : 0;
  }
  const auto n = static_cast<double>(reductions.size());
  nlohmann::json doc;
  doc["n_trials"] = parsed.harness.n_trials;
  doc["delta"] = parsed.harness.delta;
  doc["coverage_spherical"] = static_cast<double>(sph) / n;
  doc["coverage_ellipsoidal"] = static_cast<double>(ell) / n;
  emit_text(flags.out, doc.dump(2) + "\n");
  return 0;
}

int cmd_diagnose(const FlagSet& flags, const std::string& in_path,
                 double band_align, double band_ratio) {
  const auto parsed = load_config(flags);
  const auto series_rows = linucb::read_trial_csv_file(in_path);
  std::vector<linucb::PhaseSnapshot> series;
  series.reserve(series_rows.size());
  for (const auto& row : series_rows) series.push_back(row.snap);

  const double beta = parsed.bandit.beta_value();
  const auto report = linucb::phase_report(series, beta, parsed.bandit.sigma,
                                           parsed.bandit.d, band_align, band_ratio);
  nlohmann::json doc = linucb::phase_report_to_json(report);
  doc["beta"] = beta;
  doc["band_align"] = band_align;
  doc["band_ratio"] = band_ratio;
  emit_text(flags.out, doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LinUCB unit-ball simulation and inference laboratory"};
  app.require_subcommand(1);

  FlagSet flags;
  long long trial_index = 0;
  std::string clt_out;
  std::string in_path;
  double band_align = 5.0;
  double band_ratio = 5.0;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run one trial and emit its diagnostic CSV time series");
  add_common_flags(simulate, flags);
  simulate->add_option("--trial-index", trial_index, "Trial index for seeding");

  CLI::App* montecarlo = app.add_subcommand(
      "montecarlo", "Run N independent trials and emit the JSON summary");
  add_common_flags(montecarlo, flags);
  montecarlo->add_option("--clt-out", clt_out,
                         "Also write pooled studentized CLT samples as CSV");

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Phase report for a stored trial CSV");
  add_common_flags(diagnose, flags);
  diagnose->add_option("--in", in_path, "Trial CSV produced by simulate")
      ->required();
  diagnose->add_option("--band-align", band_align,
                       "Factor for the top-eigenvector alignment band");
  diagnose->add_option("--band-ratio", band_ratio,
                       "Factor for the eigenvalue near-equality band");

  CLI::App* coverage = app.add_subcommand(
      "coverage", "Coverage-only fast path over N trials");
  add_common_flags(coverage, flags);

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cmd_simulate(flags, trial_index);
    if (montecarlo->parsed()) return cmd_montecarlo(flags, clt_out);
    if (diagnose->parsed()) return cmd_diagnose(flags, in_path, band_align, band_ratio);
    if (coverage->parsed()) return cmd_coverage(flags);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& error) {
    nlohmann::json line;
    line["error"] = error.what();
    std::cerr << line.dump() << '\n';
    return error.get_exit_code() == 0 ? 1 : error.get_exit_code();
  } catch (const std::exception& error) {
    nlohmann::json line;
    line["error"] = error.what();
    std::cerr << line.dump() << '\n';
    return 1;
  }
  return 0;
}
