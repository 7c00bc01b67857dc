#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "linucb/harness.hpp"

namespace linucb {

namespace detail {

inline std::string format_g17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace detail

inline constexpr const char* kTrialCsvHeader =
    "t,lambda_min,lambda_bar,lambda_top,c_t,benchmark,ratio_2d,align_star,"
    "align_hat,weighted_err,plain_err,regret_so_far";

// Fixed 12-column time series; floats carry 17 significant digits so a
// parse-back reproduces every value exactly.
inline void write_trial_csv(std::ostream& out, const std::vector<SnapshotRow>& series) {
  out << kTrialCsvHeader << '\n';
  for (const SnapshotRow& row : series) {
    const PhaseSnapshot& s = row.snap;
    out << s.t << ',' << detail::format_g17(s.lambda_min) << ','
        << detail::format_g17(s.lambda_bar) << ',' << detail::format_g17(s.lambda_top)
        << ',' << detail::format_g17(s.c_t) << ',' << detail::format_g17(s.benchmark)
        << ',' << detail::format_g17(s.ratio_2d) << ','
        << detail::format_g17(s.align_star) << ',' << detail::format_g17(s.align_hat)
        << ',' << detail::format_g17(s.weighted_err) << ','
        << detail::format_g17(s.plain_err) << ','
        << detail::format_g17(row.regret_so_far) << '\n';
  }
}

inline void write_trial_csv_file(const std::string& path,
                                 const std::vector<SnapshotRow>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_trial_csv(out, series);
}

// Parse back a trial CSV. delta_i is not part of the column schema and comes
// back empty.
inline std::vector<SnapshotRow> read_trial_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("trial csv: missing header");
  }
  if (line != kTrialCsvHeader) {
    throw std::runtime_error("trial csv: unexpected header");
  }
  std::vector<SnapshotRow> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != 12) {
      throw std::runtime_error("trial csv: expected 12 columns");
    }
    SnapshotRow out;
    out.snap.t = static_cast<long long>(fields[0]);
    out.snap.lambda_min = fields[1];
    out.snap.lambda_bar = fields[2];
    out.snap.lambda_top = fields[3];
    out.snap.c_t = fields[4];
    out.snap.benchmark = fields[5];
    out.snap.ratio_2d = fields[6];
    out.snap.align_star = fields[7];
    out.snap.align_hat = fields[8];
    out.snap.weighted_err = fields[9];
    out.snap.plain_err = fields[10];
    out.regret_so_far = fields[11];
    series.push_back(std::move(out));
  }
  return series;
}

inline std::vector<SnapshotRow> read_trial_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return read_trial_csv(in);
}

namespace detail {

inline nlohmann::json number_or_null(double value) {
  if (std::isnan(value)) return nullptr;
  return value;
}

inline double number_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace detail

// Field-for-field JSON image of McSummary. The wall-clock measurement is the
// one field left out: it varies run to run and would break byte-identical
// re-runs.
inline nlohmann::json mc_summary_to_json(const McSummary& summary) {
  nlohmann::json doc;
  doc["n_trials"] = summary.n_trials;
  doc["normality_statistic"] = summary.normality_statistic;
  doc["normality_p_value"] = summary.normality_p_value;
  doc["coverage_spherical"] = summary.coverage_spherical;
  doc["coverage_ellipsoidal"] = summary.coverage_ellipsoidal;
  doc["eigen_ratio_median"] = summary.eigen_ratio_median;
  doc["eigen_ratio_iqr"] = summary.eigen_ratio_iqr;
  doc["error_slope"] = detail::number_or_null(summary.error_slope);
  doc["error_intercept"] = detail::number_or_null(summary.error_intercept);
  doc["mean_regret"] = summary.mean_regret;
  return doc;
}

inline McSummary mc_summary_from_json(const nlohmann::json& doc) {
  McSummary summary;
  summary.n_trials = doc.at("n_trials").get<long long>();
  summary.normality_statistic = doc.at("normality_statistic").get<std::vector<double>>();
  summary.normality_p_value = doc.at("normality_p_value").get<std::vector<double>>();
  summary.coverage_spherical = doc.at("coverage_spherical").get<double>();
  summary.coverage_ellipsoidal = doc.at("coverage_ellipsoidal").get<double>();
  summary.eigen_ratio_median = doc.at("eigen_ratio_median").get<double>();
  summary.eigen_ratio_iqr = doc.at("eigen_ratio_iqr").get<double>();
  summary.error_slope = detail::number_from(doc.at("error_slope"));
  summary.error_intercept = detail::number_from(doc.at("error_intercept"));
  summary.mean_regret = doc.at("mean_regret").get<double>();
  return summary;
}

inline bool summaries_equal(const McSummary& a, const McSummary& b) {
  const auto eq = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  if (a.n_trials != b.n_trials) return false;
  if (a.normality_statistic != b.normality_statistic) return false;
  if (a.normality_p_value != b.normality_p_value) return false;
  return eq(a.coverage_spherical, b.coverage_spherical) &&
         eq(a.coverage_ellipsoidal, b.coverage_ellipsoidal) &&
         eq(a.eigen_ratio_median, b.eigen_ratio_median) &&
         eq(a.eigen_ratio_iqr, b.eigen_ratio_iqr) &&
         eq(a.error_slope, b.error_slope) &&
         eq(a.error_intercept, b.error_intercept) &&
         eq(a.mean_regret, b.mean_regret);
}

inline void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
}

// Pooled studentized CLT samples, one row per (trial, coordinate).
inline void write_clt_csv(std::ostream& out,
                          const std::vector<TrialReduction>& reductions) {
  out << "trial,coordinate,value\n";
  for (const TrialReduction& red : reductions) {
    const double sd = std::sqrt(red.sigma2_hat);
    for (Eigen::Index j = 0; j < red.clt_stat.size(); ++j) {
      out << red.trial_index << ',' << j << ','
          << detail::format_g17(red.clt_stat[j] / sd) << '\n';
    }
  }
}

inline nlohmann::json phase_report_to_json(const PhaseReport& report) {
  nlohmann::json doc;
  doc["t1"] = report.t1;
  doc["t2"] = report.t2;
  doc["t3"] = report.t3;
  doc["lambda_min_slope"] = report.lambda_min_slope.slope;
  doc["lambda_min_intercept"] = report.lambda_min_slope.intercept;
  doc["plain_err_slope"] = report.plain_err_slope.slope;
  doc["plain_err_intercept"] = report.plain_err_slope.intercept;
  doc["weighted_err_max"] = report.weighted_err_max;
  doc["stability_ratio"] = report.stability.ratio;
  doc["stability_satisfied"] = report.stability.satisfied;
  return doc;
}

}  // namespace linucb
