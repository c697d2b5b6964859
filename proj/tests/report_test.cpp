#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace reshi;
using reshi::test::error_code_of;

namespace {

RunResult run(const std::string& strategy, double makespan, std::size_t cluster = 0, double err = 0.15,
              ErrorDistribution dist = ErrorDistribution::Normal, const std::string& wf = "chipseq") {
  RunResult r;
  r.workflow = wf;
  r.cluster = cluster;
  r.strategy = strategy;
  r.distribution = dist;
  r.err = err;
  r.makespan = makespan;
  return r;
}

const ReportRow& row_of(const AggregateReport& rep, const std::string& strategy) {
  for (const auto& r : rep.rows)
    if (r.strategy == strategy) return r;
  throw std::runtime_error("no row for " + strategy);
}

std::vector<RunResult> random_runs(std::mt19937_64& rng) {
  std::vector<RunResult> runs;
  std::uniform_real_distribution<double> ms(100, 2000);
  for (const auto& wf : {"chipseq", "eager"})
    for (auto d : {ErrorDistribution::Normal, ErrorDistribution::Exponential})
      for (double err : {0.0, 0.15})
        for (const auto& s : strategy_names())
          for (std::size_t c = 0; c < 1 + rng() % 12; ++c) runs.push_back(run(s, ms(rng), c, err, d, wf));
  return runs;
}

}  // namespace

TEST(Aggregate, RelativeMeansOfFiveStrategyCell) {
  const std::vector<std::pair<std::string, double>> means{
      {"heft", 1055.8}, {"reshi-c", 1000.0}, {"reshi-m", 1143.2}, {"minmin", 1087.1}, {"rr", 1694.1}};
  std::vector<RunResult> runs;
  for (const auto& [s, m] : means) runs.push_back(run(s, m));
  auto rep = aggregate(runs);
  ASSERT_EQ(rep.rows.size(), 5u);
  EXPECT_NEAR(row_of(rep, "heft").mean_pct, 5.58, 0.01);
  EXPECT_NEAR(row_of(rep, "reshi-c").mean_pct, 0.00, 0.01);
  EXPECT_NEAR(row_of(rep, "reshi-m").mean_pct, 14.32, 0.01);
  EXPECT_NEAR(row_of(rep, "minmin").mean_pct, 8.71, 0.01);
  EXPECT_NEAR(row_of(rep, "rr").mean_pct, 69.41, 0.01);
}

TEST(Aggregate, SingleStrategyIsItsOwnBaseline) {
  auto rep = aggregate({run("heft", 10), run("heft", 30, 1)});
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].mean, 20.0);
  EXPECT_EQ(rep.rows[0].mean_pct, 0.0);
  EXPECT_EQ(rep.rows[0].runs, 2u);
}

TEST(Aggregate, NearestRankPercentiles) {
  std::vector<double> v{10, 3, 8, 1, 7, 2, 9, 5, 4, 6};  // sorted: 1..10
  EXPECT_EQ(nearest_rank(v, 0.90), 9.0);
  EXPECT_EQ(nearest_rank(v, 0.95), 10.0);
  EXPECT_EQ(nearest_rank(v, 0.10), 1.0);
  EXPECT_EQ(nearest_rank({4.0}, 0.95), 4.0);
  std::vector<RunResult> runs;
  for (std::size_t i = 0; i < v.size(); ++i) runs.push_back(run("rr", v[i], i));
  auto rep = aggregate(runs);
  EXPECT_EQ(rep.rows[0].p90, 9.0);
  EXPECT_EQ(rep.rows[0].p95, 10.0);
  EXPECT_EQ(rep.rows[0].max, 10.0);
  EXPECT_NEAR(rep.rows[0].p90_pct, (9.0 / 5.5 - 1) * 100, 1e-9);
}

TEST(Aggregate, EmptyInputIsEmptyCell) {
  EXPECT_EQ(error_code_of([] { aggregate({}); }), "EmptyCell");
  auto failed = run("rr", 1);
  failed.ok = false;
  EXPECT_EQ(error_code_of([&] { aggregate({failed}); }), "EmptyCell");
}

TEST(Aggregate, CellsKeyedByWorkflowDistributionAndErr) {
  auto rep = aggregate({run("heft", 10, 0, 0.0), run("rr", 20, 0, 0.0), run("heft", 40, 0, 0.15), run("rr", 20, 0, 0.15)});
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows[0].err, 0.0);
  EXPECT_EQ(rep.rows[1].mean_pct, 100.0);  // rr vs heft at err 0
  EXPECT_EQ(rep.rows[2].mean_pct, 100.0);  // heft vs rr at err 0.15
  EXPECT_EQ(rep.rows[3].mean_pct, 0.0);
}

TEST(Aggregate, Invariants) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto rep = aggregate(random_runs(rng));
    std::map<std::tuple<std::string, std::string, double>, int> zeros;
    for (const auto& r : rep.rows) {
      EXPECT_LE(r.p90, r.p95);
      EXPECT_LE(r.p95, r.max);
      EXPECT_GE(r.mean_pct, 0.0);
      EXPECT_LE(r.p90_pct, r.max_pct);
      zeros[{r.workflow, r.distribution, r.err}] += r.mean_pct == 0.0;
    }
    for (const auto& [cell, n] : zeros) EXPECT_EQ(n, 1);
  }
}

TEST(Report, FiveStrategyMarkdownTable) {
  std::vector<RunResult> runs;
  for (const auto& s : strategy_names())
    for (std::size_t c = 0; c < 4; ++c) runs.push_back(run(s, 1000 + 10.0 * c + s.size()));
  std::ostringstream md;
  write_report(md, aggregate(runs), ReportFormat::Markdown);
  const auto text = md.str();
  EXPECT_NE(text.find("### chipseq - normal error, err = 0.15"), std::string::npos);
  EXPECT_NE(text.find("| Strategy | Runs | Mean [s] | Mean % | 90p % | 95p % | Max % |"), std::string::npos);
  std::size_t body_rows = 0;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("| ", 0) == 0 && line.find("Strategy") == std::string::npos) {
      ++body_rows;
      EXPECT_EQ(std::count(line.begin(), line.end(), '|'), 8);  // 7 columns, 4 relative metrics
    }
  EXPECT_EQ(body_rows, 5u);
}

TEST(Report, EmptyReportRejected) {
  std::ostringstream out;
  EXPECT_EQ(error_code_of([&] { write_report(out, AggregateReport{}, ReportFormat::Csv); }), "EmptyReport");
  EXPECT_EQ(error_code_of([&] { write_report(out, AggregateReport{}, ReportFormat::Markdown); }), "EmptyReport");
  EXPECT_EQ(error_code_of([&] { write_series_csv(out, AggregateReport{}); }), "EmptyReport");
}

TEST(Report, CsvRoundTrip) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    auto rep = aggregate(random_runs(rng));
    std::stringstream s;
    write_report_csv(s, rep);
    EXPECT_EQ(parse_report_csv(s), rep);
  }
}

TEST(Report, RawResultsRoundTrip) {
  std::mt19937_64 rng(23);
  auto runs = random_runs(rng);
  std::stringstream s;
  write_raw_results(s, runs);
  auto back = parse_raw_results(s);
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(back[i].workflow, runs[i].workflow);
    EXPECT_EQ(back[i].cluster, runs[i].cluster);
    EXPECT_EQ(back[i].strategy, runs[i].strategy);
    EXPECT_EQ(back[i].distribution, runs[i].distribution);
    EXPECT_EQ(back[i].err, runs[i].err);
    EXPECT_EQ(back[i].makespan, runs[i].makespan);
  }
  EXPECT_EQ(aggregate(back), aggregate(runs));
}

TEST(Report, SeriesGroupsStrategyCurves) {
  auto rep = aggregate({run("heft", 10, 0, 0.0), run("rr", 20, 0, 0.0), run("heft", 40, 0, 0.15), run("rr", 20, 0, 0.15)});
  std::ostringstream s;
  write_series_csv(s, rep);
  std::istringstream lines(s.str());
  std::vector<std::string> rows;
  for (std::string line; std::getline(lines, line);) rows.push_back(line);
  ASSERT_EQ(rows.size(), 2u + 4u);  // format line, column line, 4 points
  EXPECT_EQ(rows[2].substr(0, rows[2].find(",0,")), "chipseq,normal,heft");
  EXPECT_NE(rows[3].find(",heft,"), std::string::npos);
  EXPECT_NE(rows[4].find(",rr,"), std::string::npos);
}

TEST(Report, FormatParsing) {
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
  EXPECT_EQ(parse_report_format("md"), ReportFormat::Markdown);
  EXPECT_EQ(error_code_of([] { parse_report_format("xlsx"); }), "InvalidArgument");
}
