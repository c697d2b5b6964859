#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "json.hpp"
#include "reshi/csv.hpp"
#include "reshi/domain.hpp"

namespace reshi {

inline constexpr const char* kWorkflowFormat = "reshi-workflow";
inline constexpr int kWorkflowVersion = 1;
inline constexpr const char* kRuntimesFormat = "reshi-runtimes";
inline constexpr int kRuntimesVersion = 1;

// Workflow document:
//   { "format": "reshi-workflow", "version": 1, "name": "...",
//     "metrics": ["cpu_usage_pct", ...],
//     "tasks": [ { "id": "...", "cpus": 2, "memory_bytes": 4e9, "avg_runtime_s": 120.5,
//                  "features": { "cpu_usage_pct": 180, ... },
//                  "requests": { "gpus": 1 } } ],           // optional extra kinds
//     "edges": [ { "from": "...", "to": "...", "data_volume_bytes": 0 } ] }
inline WorkflowDag workflow_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kWorkflowFormat)
      fail(ErrorCode::ParseError, "not a reshi workflow document");
    if (j.at("version").get<int>() != kWorkflowVersion)
      fail(ErrorCode::UnsupportedVersion, "workflow version " + j.at("version").dump());
    auto name = j.value("name", std::string{});
    auto metrics = j.value("metrics", std::vector<std::string>{});
    std::vector<TaskDescriptor> tasks;
    for (const auto& jt : j.at("tasks")) {
      TaskDescriptor t;
      t.id = jt.at("id").get<std::string>();
      t.requests[kCpus] = jt.at("cpus").get<double>();
      t.requests[kMemory] = jt.at("memory_bytes").get<double>();
      if (jt.contains("requests"))
        for (const auto& [kind, q] : jt.at("requests").items()) t.requests[kind] = q.get<double>();
      if (jt.contains("avg_runtime_s") && !jt.at("avg_runtime_s").is_null())
        t.avg_historical_runtime = jt.at("avg_runtime_s").get<double>();
      const auto features = jt.value("features", nlohmann::json::object());
      for (const auto& [key, _] : features.items())
        if (std::find(metrics.begin(), metrics.end(), key) == metrics.end())
          fail(ErrorCode::ParseError, "task '" + t.id + "' has unknown feature '" + key + "'");
      for (const auto& m : metrics) {
        if (!features.contains(m)) fail(ErrorCode::ParseError, "task '" + t.id + "' lacks feature '" + m + "'");
        t.trace_features.push_back(features.at(m).get<double>());
      }
      tasks.push_back(std::move(t));
    }
    std::vector<Edge> edges;
    for (const auto& je : j.value("edges", nlohmann::json::array()))
      edges.push_back({je.at("from").get<std::string>(), je.at("to").get<std::string>(),
                       je.value("data_volume_bytes", 0.0)});
    return WorkflowDag(std::move(name), std::move(metrics), std::move(tasks), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed workflow: ") + e.what());
  }
}

inline nlohmann::json workflow_to_json(const WorkflowDag& dag) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : dag.tasks()) {
    nlohmann::json jt = {{"id", t.id}, {"cpus", amount(t.requests, kCpus)}, {"memory_bytes", amount(t.requests, kMemory)}};
    if (t.avg_historical_runtime) jt["avg_runtime_s"] = *t.avg_historical_runtime;
    nlohmann::json features = nlohmann::json::object();
    for (std::size_t i = 0; i < dag.metric_names().size(); ++i) features[dag.metric_names()[i]] = t.trace_features[i];
    jt["features"] = std::move(features);
    nlohmann::json extra = nlohmann::json::object();
    for (const auto& [kind, q] : t.requests)
      if (kind != kCpus && kind != kMemory) extra[kind] = q;
    if (!extra.empty()) jt["requests"] = std::move(extra);
    tasks.push_back(std::move(jt));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : dag.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"data_volume_bytes", e.data_volume}});
  return {{"format", kWorkflowFormat}, {"version", kWorkflowVersion}, {"name", dag.name()},
          {"metrics", dag.metric_names()}, {"tasks", std::move(tasks)}, {"edges", std::move(edges)}};
}

inline nlohmann::json read_json_file(const std::string& path) {
  auto in = csv::open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  auto out = csv::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

inline WorkflowDag load_workflow(const std::string& path) { return workflow_from_json(read_json_file(path)); }

// Runtime matrix file:
//   #reshi-runtimes,v1
//   task_id,machine_type,runtime_s
inline RuntimeMatrix parse_runtimes(std::istream& in, const std::string& source = "<runtimes>") {
  csv::Reader r(in, source);
  r.expect_header(kRuntimesFormat, kRuntimesVersion);
  std::vector<std::string> f;
  if (!r.next(f) || f != std::vector<std::string>{"task_id", "machine_type", "runtime_s"})
    r.error("", "header must be task_id,machine_type,runtime_s");
  RuntimeMatrix m;
  std::set<std::pair<std::string, std::string>> seen;
  while (r.next(f)) {
    if (f.size() != 3) r.error("", "expected 3 fields, got " + std::to_string(f.size()));
    double v = r.number(f[2], "runtime_s");
    if (!(v > 0.0)) r.error("runtime_s", "non-positive runtime");
    if (!seen.emplace(f[0], f[1]).second) r.error("", "duplicate entry for (" + f[0] + ", " + f[1] + ")");
    m.set(f[0], f[1], v);
  }
  if (m.size() == 0) fail(ErrorCode::EmptyDataset, source + ": no runtime rows");
  return m;
}

inline RuntimeMatrix load_runtimes(const std::string& path) {
  auto in = csv::open_input(path);
  return parse_runtimes(in, path);
}

inline void write_runtimes(std::ostream& out, const RuntimeMatrix& m) {
  out << '#' << kRuntimesFormat << ",v" << kRuntimesVersion << "\ntask_id,machine_type,runtime_s\n";
  for (const auto& [key, v] : m.entries()) out << key.first << ',' << key.second << ',' << csv::format_double(v) << '\n';
}

}  // namespace reshi
