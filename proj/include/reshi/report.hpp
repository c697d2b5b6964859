#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "reshi/csv.hpp"
#include "reshi/error_model.hpp"
#include "reshi/experiment.hpp"

namespace reshi {

/// Nearest-rank percentile: element ceil(p * n) (1-based) of the sorted sample.
inline double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) fail(ErrorCode::EmptyCell, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

struct ReportRow {
  std::string workflow;
  std::string distribution;
  double err = 0.0;
  std::string strategy;
  std::size_t runs = 0;
  double mean = 0.0, p90 = 0.0, p95 = 0.0, max = 0.0;  // seconds
  // relative to the lowest mean of the (workflow, distribution, err) cell, in %
  double mean_pct = 0.0, p90_pct = 0.0, p95_pct = 0.0, max_pct = 0.0;

  bool operator==(const ReportRow&) const = default;
};

struct AggregateReport {
  std::vector<ReportRow> rows;
  bool operator==(const AggregateReport&) const = default;
};

inline double relative_pct(double value, double best_mean) { return (value / best_mean - 1.0) * 100.0; }

/// One row per (workflow, distribution, err, strategy). Workflows,
/// distributions and strategies keep their first-appearance order; error
/// levels are ascending.
inline AggregateReport aggregate(const std::vector<RunResult>& runs) {
  std::vector<std::string> workflows, dists, strategies;
  auto note = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  std::map<std::tuple<std::string, std::string, double, std::string>, std::vector<double>> cells;
  std::set<double> errs;
  for (const auto& r : runs) {
    if (!r.ok) continue;
    const std::string d(to_string(r.distribution));
    note(workflows, r.workflow);
    note(dists, d);
    note(strategies, r.strategy);
    errs.insert(r.err);
    cells[{r.workflow, d, r.err, r.strategy}].push_back(r.makespan);
  }

  AggregateReport report;
  for (const auto& w : workflows)
    for (const auto& d : dists)
      for (double e : errs) {
        std::vector<ReportRow> group;
        for (const auto& s : strategies) {
          auto it = cells.find({w, d, e, s});
          if (it == cells.end()) continue;
          const auto& v = it->second;
          ReportRow row{w, d, e, s, v.size()};
          double sum = 0.0;
          for (double x : v) sum += x;
          row.mean = sum / static_cast<double>(v.size());
          row.p90 = nearest_rank(v, 0.90);
          row.p95 = nearest_rank(v, 0.95);
          row.max = *std::max_element(v.begin(), v.end());
          group.push_back(std::move(row));
        }
        if (group.empty()) continue;
        const double best = std::min_element(group.begin(), group.end(), [](const auto& a, const auto& b) {
                              return a.mean < b.mean;
                            })->mean;
        for (auto& row : group) {
          row.mean_pct = relative_pct(row.mean, best);
          row.p90_pct = relative_pct(row.p90, best);
          row.p95_pct = relative_pct(row.p95, best);
          row.max_pct = relative_pct(row.max, best);
          report.rows.push_back(std::move(row));
        }
      }
  if (report.rows.empty()) fail(ErrorCode::EmptyCell, "no successful runs to aggregate");
  return report;
}

// ---------------------------------------------------------------------------
// Text formats

inline constexpr const char* kReportFormat = "reshi-report";
inline constexpr const char* kRawFormat = "reshi-raw";
inline constexpr const char* kSeriesFormat = "reshi-series";

enum class ReportFormat { Csv, Markdown };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "md") return ReportFormat::Markdown;
  fail(ErrorCode::InvalidArgument, "unknown report format '" + std::string(s) + "'");
}

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"workflow", "distribution", "err",    "strategy", "runs",
                                             "mean_s",   "p90_s",        "p95_s",  "max_s",    "mean_pct",
                                             "p90_pct",  "p95_pct",      "max_pct"};
  return cols;
}

inline void write_report_csv(std::ostream& out, const AggregateReport& report) {
  if (report.rows.empty()) fail(ErrorCode::EmptyReport, "report has no rows");
  using csv::format_double;
  out << '#' << kReportFormat << ",v1\n" << csv::join(report_columns()) << '\n';
  for (const auto& r : report.rows)
    out << r.workflow << ',' << r.distribution << ',' << format_double(r.err) << ',' << r.strategy << ',' << r.runs
        << ',' << format_double(r.mean) << ',' << format_double(r.p90) << ',' << format_double(r.p95) << ','
        << format_double(r.max) << ',' << format_double(r.mean_pct) << ',' << format_double(r.p90_pct) << ','
        << format_double(r.p95_pct) << ',' << format_double(r.max_pct) << '\n';
}

inline AggregateReport parse_report_csv(std::istream& in, const std::string& source = "<report>") {
  csv::Reader r(in, source);
  r.expect_header(kReportFormat, 1);
  std::vector<std::string> f;
  if (!r.next(f) || f != report_columns()) r.error("", "unexpected report columns");
  AggregateReport report;
  while (r.next(f)) {
    if (f.size() != report_columns().size()) r.error("", "wrong field count");
    ReportRow row;
    row.workflow = f[0];
    row.distribution = f[1];
    row.err = r.number(f[2], "err");
    row.strategy = f[3];
    row.runs = static_cast<std::size_t>(r.number(f[4], "runs"));
    row.mean = r.number(f[5], "mean_s");
    row.p90 = r.number(f[6], "p90_s");
    row.p95 = r.number(f[7], "p95_s");
    row.max = r.number(f[8], "max_s");
    row.mean_pct = r.number(f[9], "mean_pct");
    row.p90_pct = r.number(f[10], "p90_pct");
    row.p95_pct = r.number(f[11], "p95_pct");
    row.max_pct = r.number(f[12], "max_pct");
    report.rows.push_back(std::move(row));
  }
  return report;
}

/// One table per (workflow, distribution, err): strategies as rows, relative
/// Mean/90p/95p/Max columns.
inline void write_report_markdown(std::ostream& out, const AggregateReport& report) {
  if (report.rows.empty()) fail(ErrorCode::EmptyReport, "report has no rows");
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  const ReportRow* prev = nullptr;
  for (const auto& r : report.rows) {
    if (!prev || prev->workflow != r.workflow || prev->distribution != r.distribution || prev->err != r.err) {
      if (prev) s << '\n';
      s << "### " << r.workflow << " - " << r.distribution << " error, err = " << r.err << "\n\n";
      s << "| Strategy | Runs | Mean [s] | Mean % | 90p % | 95p % | Max % |\n";
      s << "|---|---:|---:|---:|---:|---:|---:|\n";
    }
    s << "| " << r.strategy << " | " << r.runs << " | " << r.mean << " | " << r.mean_pct << " | " << r.p90_pct
      << " | " << r.p95_pct << " | " << r.max_pct << " |\n";
    prev = &r;
  }
  out << s.str();
}

inline void write_report(std::ostream& out, const AggregateReport& report, ReportFormat format) {
  if (format == ReportFormat::Csv) write_report_csv(out, report);
  else write_report_markdown(out, report);
}

/// Plot-ready series: one line per (workflow, distribution, strategy, err),
/// grouped so each strategy's curve over err is contiguous.
inline void write_series_csv(std::ostream& out, const AggregateReport& report) {
  if (report.rows.empty()) fail(ErrorCode::EmptyReport, "report has no rows");
  std::vector<const ReportRow*> rows;
  for (const auto& r : report.rows) rows.push_back(&r);
  std::vector<std::string> order;                         // strategies, first appearance
  std::vector<std::pair<std::string, std::string>> groups;  // (workflow, distribution)
  for (const auto& r : report.rows) {
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
    std::pair g{r.workflow, r.distribution};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  auto key = [&](const ReportRow* r) {
    auto g = std::find(groups.begin(), groups.end(), std::pair{r->workflow, r->distribution}) - groups.begin();
    auto s = std::find(order.begin(), order.end(), r->strategy) - order.begin();
    return std::tuple(g, s, r->err);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ReportRow* a, const ReportRow* b) { return key(a) < key(b); });
  out << '#' << kSeriesFormat << ",v1\nworkflow,distribution,strategy,err,mean_s,p90_s,p95_s,max_s\n";
  for (const auto* r : rows)
    out << r->workflow << ',' << r->distribution << ',' << r->strategy << ',' << csv::format_double(r->err) << ','
        << csv::format_double(r->mean) << ',' << csv::format_double(r->p90) << ',' << csv::format_double(r->p95)
        << ',' << csv::format_double(r->max) << '\n';
}

inline void write_raw_results(std::ostream& out, const std::vector<RunResult>& runs) {
  out << '#' << kRawFormat << ",v1\nworkflow,cluster,strategy,distribution,err,makespan_s\n";
  for (const auto& r : runs)
    out << r.workflow << ',' << r.cluster << ',' << r.strategy << ',' << to_string(r.distribution) << ','
        << csv::format_double(r.err) << ',' << csv::format_double(r.makespan) << '\n';
}

inline void write_failures(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "workflow,cluster,strategy,distribution,err,error\n";
  for (const auto& r : runs) {
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << r.workflow << ',' << r.cluster << ',' << r.strategy << ',' << to_string(r.distribution) << ','
        << csv::format_double(r.err) << ',' << msg << '\n';
  }
}

inline std::vector<RunResult> parse_raw_results(std::istream& in, const std::string& source = "<raw>") {
  csv::Reader r(in, source);
  r.expect_header(kRawFormat, 1);
  std::vector<std::string> f;
  const std::vector<std::string> cols{"workflow", "cluster", "strategy", "distribution", "err", "makespan_s"};
  if (!r.next(f) || f != cols) r.error("", "unexpected raw result columns");
  std::vector<RunResult> runs;
  while (r.next(f)) {
    if (f.size() != cols.size()) r.error("", "wrong field count");
    RunResult run;
    run.workflow = f[0];
    run.cluster = static_cast<std::size_t>(r.number(f[1], "cluster"));
    run.strategy = f[2];
    run.distribution = parse_distribution(f[3]);
    run.err = r.number(f[4], "err");
    run.makespan = r.number(f[5], "makespan_s");
    runs.push_back(std::move(run));
  }
  return runs;
}

struct ExperimentFiles {
  static constexpr const char* raw = "raw_results.csv";
  static constexpr const char* failures = "failures.csv";
  static constexpr const char* report_csv = "report.csv";
  static constexpr const char* report_md = "report.md";
  static constexpr const char* series = "series.csv";
};

/// Runs the sweep and writes raw results, failures, the aggregate report in
/// both formats and the plot series into `out_dir`.
inline SweepResults run_experiment(const ExperimentPlan& plan, const std::filesystem::path& out_dir, unsigned jobs = 1) {
  auto results = run_sweep(plan, jobs);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());
  auto write = [&](const char* name, auto&& fn) {
    auto out = csv::open_output((out_dir / name).string());
    fn(out);
    if (!out) fail(ErrorCode::IoError, "failed writing '" + (out_dir / name).string() + "'");
  };
  write(ExperimentFiles::raw, [&](std::ostream& o) { write_raw_results(o, results.runs); });
  write(ExperimentFiles::failures, [&](std::ostream& o) { write_failures(o, results.failures); });
  if (!results.runs.empty()) {
    const auto report = aggregate(results.runs);
    write(ExperimentFiles::report_csv, [&](std::ostream& o) { write_report_csv(o, report); });
    write(ExperimentFiles::report_md, [&](std::ostream& o) { write_report_markdown(o, report); });
    write(ExperimentFiles::series, [&](std::ostream& o) { write_series_csv(o, report); });
  }
  return results;
}

}  // namespace reshi
