#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace reshi;
using reshi::test::error_code_of;
using reshi::test::task;

namespace {

nlohmann::json sample_workflow() {
  return nlohmann::json::parse(R"({
    "format": "reshi-workflow", "version": 1, "name": "demo",
    "metrics": ["cpu_usage_pct", "bytes_read"],
    "tasks": [
      {"id": "a", "cpus": 2, "memory_bytes": 4e9, "avg_runtime_s": 12.5,
       "features": {"cpu_usage_pct": 180, "bytes_read": 1000}},
      {"id": "b", "cpus": 1, "memory_bytes": 1e9,
       "features": {"cpu_usage_pct": 90, "bytes_read": 50}, "requests": {"gpus": 1}}
    ],
    "edges": [{"from": "a", "to": "b", "data_volume_bytes": 2048}]
  })");
}

}  // namespace

TEST(WorkflowDocument, ParsesAllFields) {
  auto d = workflow_from_json(sample_workflow());
  EXPECT_EQ(d.name(), "demo");
  EXPECT_EQ(d.metric_names(), (std::vector<std::string>{"cpu_usage_pct", "bytes_read"}));
  ASSERT_EQ(d.size(), 2u);
  const auto& a = d.task(d.index_of("a"));
  EXPECT_EQ(amount(a.requests, kCpus), 2.0);
  EXPECT_EQ(amount(a.requests, kMemory), 4e9);
  EXPECT_EQ(a.avg_historical_runtime, 12.5);
  EXPECT_EQ(a.trace_features, (std::vector<double>{180, 1000}));
  const auto& b = d.task(d.index_of("b"));
  EXPECT_FALSE(b.avg_historical_runtime);
  EXPECT_EQ(amount(b.requests, "gpus"), 1.0);
  EXPECT_EQ(d.data_volume(d.index_of("a"), d.index_of("b")), 2048.0);
}

TEST(WorkflowDocument, RoundTrip) {
  auto d = workflow_from_json(sample_workflow());
  auto back = workflow_from_json(workflow_to_json(d));
  EXPECT_EQ(workflow_to_json(back), workflow_to_json(d));
  EXPECT_EQ(back.successors(back.index_of("a")), d.successors(d.index_of("a")));
}

TEST(WorkflowDocument, Rejections) {
  auto j = sample_workflow();
  j["version"] = 3;
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "UnsupportedVersion");
  j = sample_workflow();
  j["format"] = "other";
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "ParseError");
  j = sample_workflow();
  j["tasks"][0]["features"].erase("bytes_read");
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "ParseError");
  j = sample_workflow();
  j["tasks"][0]["features"]["mystery"] = 1;
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "ParseError");
  j = sample_workflow();
  j["tasks"][1].erase("cpus");
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "ParseError");
  j = sample_workflow();
  j["edges"].push_back({{"from", "b"}, {"to", "a"}});
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "CycleDetected");
  j = sample_workflow();
  j["edges"].push_back({{"from", "a"}, {"to", "zzz"}});
  EXPECT_EQ(error_code_of([&] { workflow_from_json(j); }), "UnknownTask");
}

TEST(RuntimesFile, RoundTripAndLookups) {
  RuntimeMatrix m;
  m.set("a", "m5.large", 42.0);
  m.set("a", "c5.xlarge", 0.1 + 0.2);
  m.set("b", "m5.large", 1e-3);
  std::stringstream s;
  write_runtimes(s, m);
  auto back = parse_runtimes(s);
  EXPECT_EQ(back.entries(), m.entries());
  EXPECT_EQ(back.lookup("a", "m5.large"), 42.0);
  EXPECT_EQ(error_code_of([&] { back.lookup("b", "c5.xlarge"); }), "MissingRuntime");
}

TEST(RuntimesFile, Rejections) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return error_code_of([&] { parse_runtimes(in); });
  };
  const std::string head = "#reshi-runtimes,v1\ntask_id,machine_type,runtime_s\n";
  EXPECT_EQ(parse(head), "EmptyDataset");
  EXPECT_EQ(parse(head + "a,x,0\n"), "ParseError");
  EXPECT_EQ(parse(head + "a,x,-3\n"), "ParseError");
  EXPECT_EQ(parse(head + "a,x,abc\n"), "ParseError");
  EXPECT_EQ(parse(head + "a,x,1\na,x,2\n"), "ParseError");
  EXPECT_EQ(parse(head + "a,x\n"), "ParseError");
  EXPECT_EQ(parse("#reshi-runtimes,v2\ntask_id,machine_type,runtime_s\na,x,1\n"), "UnsupportedVersion");
  EXPECT_EQ(parse(head + "a,x,1\n"), "none");
}

TEST(RuntimesFile, ScaledMultipliesEveryEntry) {
  RuntimeMatrix m;
  m.set("a", "x", 2.0);
  m.set("b", "y", 3.0);
  auto s = m.scaled(10.0);
  EXPECT_EQ(s.lookup("a", "x"), 20.0);
  EXPECT_EQ(s.lookup("b", "y"), 30.0);
  EXPECT_EQ(error_code_of([&] { m.scaled(0.0); }), "InvalidArgument");
}

TEST(JsonFiles, MissingFileIsIoError) {
  EXPECT_EQ(error_code_of([] { read_json_file("/nonexistent/dir/file.json"); }), "IoError");
  EXPECT_EQ(error_code_of([] { load_runtimes("/nonexistent/dir/file.csv"); }), "IoError");
}
