#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "reshi/domain.hpp"
#include "reshi/error_model.hpp"
#include "reshi/profiling.hpp"
#include "reshi/recommender.hpp"
#include "reshi/schedulers.hpp"
#include "reshi/simulator.hpp"
#include "reshi/workflow_io.hpp"

namespace reshi {

/// Machine types available for cluster generation: one profile row per type.
/// Ids are ignored; the machine_type label identifies the entry.
inline void validate_catalog(const Cluster& catalog) {
  std::set<std::string> seen;
  for (const auto& n : catalog.nodes())
    if (!seen.insert(n.machine_type).second)
      fail(ErrorCode::InvalidPlan, "machine type '" + n.machine_type + "' listed twice in the catalog");
}

/// Each cluster draws `nodes_per_cluster` machine types uniformly with
/// replacement. Node ids are `c{k}-n{j}`.
inline std::vector<Cluster> generate_clusters(const Cluster& catalog, std::size_t cluster_count,
                                              std::size_t nodes_per_cluster, std::uint64_t seed) {
  if (catalog.size() == 0) fail(ErrorCode::EmptyCatalog, "catalog has no machine types");
  if (nodes_per_cluster == 0) fail(ErrorCode::InvalidArgument, "nodes_per_cluster must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
  std::vector<Cluster> out;
  out.reserve(cluster_count);
  for (std::size_t k = 0; k < cluster_count; ++k) {
    std::vector<NodeProfile> nodes;
    for (std::size_t j = 0; j < nodes_per_cluster; ++j) {
      NodeProfile n = catalog.node(pick(rng));
      n.id = "c" + std::to_string(k) + "-n" + std::to_string(j);
      n.benchmark_ranks.clear();
      nodes.push_back(std::move(n));
    }
    out.emplace_back(std::move(nodes), catalog.benchmarks());
  }
  return out;
}

struct WorkflowSpec {
  std::string name;
  WorkflowDag dag;
  RuntimeMatrix runtimes;
};

struct ExperimentPlan {
  std::vector<WorkflowSpec> workflows;
  Cluster catalog;
  TraceSet traces;
  std::size_t cluster_count = 200;
  std::size_t nodes_per_cluster = 40;
  std::vector<std::string> strategies = strategy_names();
  std::vector<ErrorDistribution> distributions{ErrorDistribution::Normal, ErrorDistribution::Exponential};
  std::vector<double> error_levels{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  std::uint64_t master_seed = 1;
  double bandwidth = kUnlimitedBandwidth;
  double runtime_scale = 1.0;
  TargetMode target = TargetMode::Normalized;
  TreeParams tree;

  void validate() const {
    if (workflows.empty()) fail(ErrorCode::InvalidPlan, "plan lists no workflows");
    if (cluster_count < 1) fail(ErrorCode::InvalidPlan, "cluster_count must be >= 1");
    if (nodes_per_cluster < 1) fail(ErrorCode::InvalidPlan, "nodes_per_cluster must be >= 1");
    if (strategies.empty()) fail(ErrorCode::InvalidPlan, "plan lists no strategies");
    for (const auto& s : strategies)
      if (std::find(strategy_names().begin(), strategy_names().end(), s) == strategy_names().end())
        fail(ErrorCode::InvalidPlan, "unknown strategy '" + s + "'");
    if (distributions.empty()) fail(ErrorCode::InvalidPlan, "plan lists no error distributions");
    if (error_levels.empty()) fail(ErrorCode::InvalidPlan, "plan lists no error levels");
    for (double e : error_levels)
      if (!(e >= 0.0)) fail(ErrorCode::InvalidPlan, "error levels must be >= 0");
    if (!(runtime_scale > 0.0)) fail(ErrorCode::InvalidPlan, "runtime_scale must be positive");
    std::set<std::string> names;
    for (const auto& w : workflows)
      if (!names.insert(w.name).second) fail(ErrorCode::InvalidPlan, "workflow '" + w.name + "' listed twice");
    validate_catalog(catalog);
    tree.validate();
  }

  bool needs_model() const {
    return std::any_of(strategies.begin(), strategies.end(), [](const auto& s) { return is_reshi(s); });
  }
};

struct RunResult {
  std::string workflow;
  std::size_t cluster = 0;
  std::string strategy;
  ErrorDistribution distribution = ErrorDistribution::None;
  double err = 0.0;
  double makespan = 0.0;
  bool ok = true;
  std::string error;  // set when !ok
};

struct SweepResults {
  std::vector<RunResult> runs;      // successful runs, plan order
  std::vector<RunResult> failures;  // failed runs, plan order
};

/// Error-stream seed for one (workflow, cluster, distribution). Strategy and
/// error level are deliberately left out so every strategy and level sees the
/// same underlying samples.
inline std::uint64_t run_seed(std::uint64_t master, std::size_t cluster, const std::string& workflow,
                              ErrorDistribution dist) {
  auto s = derive_seed(master, 0x5eed0000ULL + cluster);
  s = derive_seed(s, hash_string(workflow));
  return derive_seed(s, static_cast<std::uint64_t>(dist) + 1);
}

inline std::uint64_t cluster_seed(std::uint64_t master) { return derive_seed(master, hash_string("clusters")); }

/// Simulates every (workflow, cluster, strategy, distribution, err) of the
/// plan. Jobs are (workflow, cluster) pairs spread over `jobs` threads; output
/// order never depends on scheduling. A failing run is recorded and the sweep
/// goes on.
inline SweepResults run_sweep(const ExperimentPlan& plan, unsigned jobs = 1,
                              std::shared_ptr<const RecommenderModel> model = nullptr) {
  plan.validate();
  if (plan.needs_model() && !model)
    model = std::make_shared<const RecommenderModel>(
        RecommenderModel::train(plan.traces, plan.catalog, plan.target, plan.tree, plan.master_seed));
  const auto clusters = generate_clusters(plan.catalog, plan.cluster_count, plan.nodes_per_cluster,
                                          cluster_seed(plan.master_seed));
  std::vector<RuntimeMatrix> matrices;
  for (const auto& w : plan.workflows) matrices.push_back(w.runtimes.scaled(plan.runtime_scale));

  const std::size_t per_job = plan.strategies.size() * plan.distributions.size() * plan.error_levels.size();
  const std::size_t job_count = plan.workflows.size() * clusters.size();
  std::vector<RunResult> slots(job_count * per_job);

  auto run_job = [&](std::size_t job) {
    const std::size_t w = job / clusters.size(), c = job % clusters.size();
    const auto& wf = plan.workflows[w];
    std::size_t slot = job * per_job;
    for (const auto& strategy_name : plan.strategies)
      for (auto dist : plan.distributions)
        for (double err : plan.error_levels) {
          RunResult& r = slots[slot++];
          r.workflow = wf.name;
          r.cluster = c;
          r.strategy = strategy_name;
          r.distribution = dist;
          r.err = err;
          try {
            auto strategy = make_strategy(strategy_name, model);
            PredictionErrorModel em{dist, err, run_seed(plan.master_seed, c, wf.name, dist)};
            r.makespan = simulate(wf.dag, clusters[c], *strategy, matrices[w], em, {plan.bandwidth}).makespan;
          } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
          }
        }
  };

  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    for (std::size_t j = 0; j < job_count; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < jobs; ++i)
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < job_count;) run_job(j);
      });
    for (auto& t : pool) t.join();
  }

  SweepResults out;
  for (auto& r : slots) (r.ok ? out.runs : out.failures).push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------------------
// Plan document
//
//   { "format": "reshi-plan", "version": 1,
//     "catalog": "catalog.csv", "traces": "traces.csv",
//     "workflows": [ { "name": "chipseq", "dag": "chipseq.json", "runtimes": "chipseq_runtimes.csv" } ],
//     "cluster_count": 200, "nodes_per_cluster": 40,
//     "strategies": ["heft", "reshi-c", "reshi-m", "minmin", "rr"],
//     "distributions": ["normal", "exponential"],
//     "error_levels": [0, 0.05, ...],
//     "master_seed": 42, "bandwidth_bytes_per_s": null, "runtime_scale": 1.0,
//     "model": { "target": "normalized", "max_depth": 8, "min_samples_leaf": 3,
//                "min_variance_reduction": 1e-7 } }
//
// Relative paths resolve against the plan file's directory.

inline constexpr const char* kPlanFormat = "reshi-plan";
inline constexpr int kPlanVersion = 1;

inline ExperimentPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_absolute() ? path : base_dir / path).string();
  };
  try {
    if (j.at("format").get<std::string>() != kPlanFormat) fail(ErrorCode::InvalidPlan, "not a reshi plan document");
    if (j.at("version").get<int>() != kPlanVersion)
      fail(ErrorCode::UnsupportedVersion, "plan version " + j.at("version").dump());
    plan.catalog = load_profiles(resolve(j.at("catalog").get<std::string>()));
    plan.traces = load_traces(resolve(j.at("traces").get<std::string>()));
    for (const auto& jw : j.at("workflows")) {
      WorkflowSpec w;
      w.dag = load_workflow(resolve(jw.at("dag").get<std::string>()));
      w.name = jw.value("name", w.dag.name());
      w.runtimes = load_runtimes(resolve(jw.at("runtimes").get<std::string>()));
      plan.workflows.push_back(std::move(w));
    }
    plan.cluster_count = j.value("cluster_count", plan.cluster_count);
    plan.nodes_per_cluster = j.value("nodes_per_cluster", plan.nodes_per_cluster);
    if (j.contains("strategies")) plan.strategies = j.at("strategies").get<std::vector<std::string>>();
    if (j.contains("distributions")) {
      plan.distributions.clear();
      for (const auto& d : j.at("distributions")) plan.distributions.push_back(parse_distribution(d.get<std::string>()));
    }
    if (j.contains("error_levels")) plan.error_levels = j.at("error_levels").get<std::vector<double>>();
    plan.master_seed = j.value("master_seed", plan.master_seed);
    if (j.contains("bandwidth_bytes_per_s") && !j.at("bandwidth_bytes_per_s").is_null())
      plan.bandwidth = j.at("bandwidth_bytes_per_s").get<double>();
    plan.runtime_scale = j.value("runtime_scale", plan.runtime_scale);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      plan.target = parse_target_mode(m.value("target", std::string("normalized")));
      plan.tree.max_depth = m.value("max_depth", plan.tree.max_depth);
      plan.tree.min_samples_leaf = m.value("min_samples_leaf", plan.tree.min_samples_leaf);
      plan.tree.min_variance_reduction = m.value("min_variance_reduction", plan.tree.min_variance_reduction);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidPlan, std::string("malformed plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

inline ExperimentPlan load_plan(const std::string& path) {
  return plan_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace reshi
