#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "adapj/csv.hpp"
#include "adapj/types.hpp"

namespace adapj {

struct StepRecord {
  long t = 0;
  StateVec sd;       // desired state at t
  StateVec s;        // measured state at t
  ActuationVec a;    // actuation executed at t
  bool saturated = false;
  double update_norm = 0.0;      // Frobenius norm of the controller update
  double compute_seconds = 0.0;  // act + update wall time (kept out of the CSV)
};

inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(values.size()))) - 1;
  return values[std::min(idx, values.size() - 1)];
}

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Full record of one closed-loop run plus aggregate tracking metrics.
struct RunReport {
  std::vector<StepRecord> steps;
  double dt = 0.1;
  std::string controller;
  std::optional<std::string> aborted_reason;  // set when the run ended early

  /// Per-step Euclidean tracking errors ||sd_t - s_t|| in mm.
  std::vector<double> errors() const {
    std::vector<double> e;
    e.reserve(steps.size());
    for (const StepRecord& r : steps) e.push_back((r.sd - r.s).norm());
    return e;
  }

  double mae_mm(std::size_t begin = 0, std::size_t end = SIZE_MAX) const {
    end = std::min(end, steps.size());
    if (begin >= end) return 0.0;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += (steps[i].sd - steps[i].s).norm();
    return sum / static_cast<double>(end - begin);
  }

  double err_std_mm(std::size_t begin = 0, std::size_t end = SIZE_MAX) const {
    end = std::min(end, steps.size());
    if (end - begin < 2) return 0.0;
    const double mean = mae_mm(begin, end);
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = (steps[i].sd - steps[i].s).norm() - mean;
      ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(end - begin));
  }

  std::vector<double> compute_times() const {
    std::vector<double> t;
    t.reserve(steps.size());
    for (const StepRecord& r : steps) t.push_back(r.compute_seconds);
    return t;
  }

  double mean_compute_seconds() const {
    if (steps.empty()) return 0.0;
    double sum = 0.0;
    for (const StepRecord& r : steps) sum += r.compute_seconds;
    return sum / static_cast<double>(steps.size());
  }

  double p95_compute_seconds() const { return percentile(compute_times(), 0.95); }

  /// Mean and standard error of one actuation channel over [begin, end).
  std::pair<double, double> actuation_mean_se(Eigen::Index channel, std::size_t begin,
                                              std::size_t end) const {
    end = std::min(end, steps.size());
    if (begin >= end) return {0.0, 0.0};
    const auto n = static_cast<double>(end - begin);
    double mean = 0.0;
    for (std::size_t i = begin; i < end; ++i) mean += steps[i].a[channel];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = steps[i].a[channel] - mean;
      ss += d * d;
    }
    return {mean, std::sqrt(ss / n) / std::sqrt(n)};
  }
};

/// Time-series schema: t,sd_*,s_*,a_*,saturated,update_norm. Wall times stay
/// in memory so repeated runs serialize byte-identically.
inline void write_timeseries_csv(const std::string& path, const RunReport& report) {
  auto f = csv::open_out(path);
  const Eigen::Index ds = report.steps.empty() ? 0 : report.steps.front().s.size();
  const Eigen::Index da = report.steps.empty() ? 0 : report.steps.front().a.size();
  f << "t";
  for (Eigen::Index i = 0; i < ds; ++i) f << ",sd_" << i;
  for (Eigen::Index i = 0; i < ds; ++i) f << ",s_" << i;
  for (Eigen::Index i = 0; i < da; ++i) f << ",a_" << i;
  f << ",saturated,update_norm\n";
  for (const StepRecord& r : report.steps) {
    f << r.t;
    for (Eigen::Index i = 0; i < ds; ++i) f << "," << csv::fmt(r.sd[i]);
    for (Eigen::Index i = 0; i < ds; ++i) f << "," << csv::fmt(r.s[i]);
    for (Eigen::Index i = 0; i < da; ++i) f << "," << csv::fmt(r.a[i]);
    f << "," << (r.saturated ? 1 : 0) << "," << csv::fmt(r.update_norm) << "\n";
  }
}

inline RunReport read_timeseries_csv(const std::string& path) {
  auto f = csv::open_in(path);
  std::string line;
  if (!std::getline(f, line)) fail(ErrorCategory::Data, "empty time series '" + path + "'");
  const auto header = csv::split_line(line);
  Eigen::Index ds = 0, da = 0;
  for (const std::string& h : header) {
    if (h.rfind("sd_", 0) == 0) ++ds;
    else if (h.rfind("a_", 0) == 0) ++da;
  }
  RunReport report;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != static_cast<std::size_t>(1 + 2 * ds + da + 2))
      fail(ErrorCategory::Data, "bad time-series row in '" + path + "'");
    StepRecord r;
    r.t = std::stol(fields[0]);
    r.sd.resize(ds);
    r.s.resize(ds);
    r.a.resize(da);
    std::size_t k = 1;
    for (Eigen::Index i = 0; i < ds; ++i) r.sd[i] = std::stod(fields[k++]);
    for (Eigen::Index i = 0; i < ds; ++i) r.s[i] = std::stod(fields[k++]);
    for (Eigen::Index i = 0; i < da; ++i) r.a[i] = std::stod(fields[k++]);
    r.saturated = fields[k++] == "1";
    r.update_norm = std::stod(fields[k++]);
    report.steps.push_back(std::move(r));
  }
  return report;
}

}  // namespace adapj
