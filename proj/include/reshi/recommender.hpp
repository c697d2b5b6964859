#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "reshi/domain.hpp"
#include "reshi/profiling.hpp"
#include "reshi/regression_tree.hpp"

namespace reshi {

/// M_alloc: ids of nodes whose total capacity covers every request of `task`.
inline std::vector<std::string> filter_allocatable(const Cluster& cluster, const TaskDescriptor& task) {
  std::vector<std::string> out;
  for (const auto& n : cluster.nodes())
    if (covers(n.capacities, task.requests)) out.push_back(n.id);
  return out;
}

struct PriorityEntry {
  std::string node_id;
  double score = 0.0;

  bool operator==(const PriorityEntry&) const = default;
};

/// Allocatable nodes ordered best first: ascending score, then ascending id.
struct PriorityList {
  std::vector<PriorityEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  const std::string& best() const { return entries.front().node_id; }
  bool operator==(const PriorityList&) const = default;
};

namespace detail {

[[noreturn]] inline void no_allocatable_node(const Cluster& cluster, const TaskDescriptor& task) {
  // name the first kind that no node can hold on its own, if there is one
  for (const auto& [kind, q] : task.requests) {
    bool any = std::any_of(cluster.nodes().begin(), cluster.nodes().end(),
                           [&](const NodeProfile& n) { return amount(n.capacities, kind) >= q; });
    if (!any)
      fail(ErrorCode::NoAllocatableNode,
           "task '" + task.id + "' requests " + csv::format_double(q) + " " + kind + ", more than any node offers");
  }
  fail(ErrorCode::NoAllocatableNode, "task '" + task.id + "': no single node covers the combined requests");
}

}  // namespace detail

inline PriorityList rank_nodes(const RegressionTree& tree, const TaskDescriptor& task, const ProfiledCluster& profiled) {
  const auto expected = task.trace_features.size() + profiled.feature_count();
  if (tree.dimensions() != expected)
    fail(ErrorCode::DimensionMismatch, "tree expects " + std::to_string(tree.dimensions()) + " features, task+node give " +
                                           std::to_string(expected));
  PriorityList p;
  for (const auto& n : profiled.nodes()) {
    if (!covers(n.capacities, task.requests)) continue;
    if (n.benchmark_ranks.size() != profiled.feature_count())
      fail(ErrorCode::InvalidArgument, "node '" + n.id + "' has not been ranked");
    p.entries.push_back({n.id, tree.predict(combine_features(task.trace_features, n))});
  }
  if (p.entries.empty()) detail::no_allocatable_node(profiled.cluster(), task);
  std::sort(p.entries.begin(), p.entries.end(), [](const PriorityEntry& a, const PriorityEntry& b) {
    return a.score != b.score ? a.score < b.score : a.node_id < b.node_id;
  });
  return p;
}

/// Trained tree plus everything needed to score nodes of any cluster with the
/// same benchmark schema: metric names, the frozen rank scale and the
/// per-task summaries observed in the traces.
class RecommenderModel {
 public:
  static constexpr const char* kFormat = "reshi-model";
  static constexpr int kVersion = 1;

  RecommenderModel() = default;

  /// Ranks `profiles` for the training run, builds X from `traces` and fits the tree.
  static RecommenderModel train(const TraceSet& traces, const Cluster& profiles, TargetMode mode,
                                const TreeParams& params, std::uint64_t seed = 0) {
    RecommenderModel m;
    auto profiled = rank_features(profiles);
    m.reference_ = RankReference(profiled);
    m.metric_names_ = traces.metric_names;
    m.target_ = mode;
    m.tasks_ = task_catalog_from_traces(traces);
    auto set = build_training_set(traces, profiled, m.tasks_, mode);
    m.tree_ = RegressionTree::train(set.features, set.targets, params, seed);
    m.training_rows_ = set.features.rows();
    return m;
  }

  const RegressionTree& tree() const noexcept { return tree_; }
  const RankReference& reference() const noexcept { return reference_; }
  const std::vector<std::string>& metric_names() const noexcept { return metric_names_; }
  TargetMode target() const noexcept { return target_; }
  const std::map<std::string, TaskDescriptor>& tasks() const noexcept { return tasks_; }
  std::size_t training_rows() const noexcept { return training_rows_; }

  /// Puts `cluster` on the model's rank scale after checking the schema.
  ProfiledCluster profile(const Cluster& cluster) const { return reference_.apply(cluster); }

  void check_metrics(const std::vector<std::string>& metric_names) const {
    if (metric_names != metric_names_)
      fail(ErrorCode::SchemaMismatch, "task metric columns differ from the model's training metrics");
  }

  PriorityList rank(const TaskDescriptor& task, const ProfiledCluster& profiled) const {
    return rank_nodes(tree_, task, profiled);
  }

  nlohmann::json to_json() const {
    nlohmann::json benchmarks = nlohmann::json::array();
    for (const auto& b : reference_.benchmarks())
      benchmarks.push_back({{"name", b.name}, {"orientation", std::string(to_string(b.orientation))}});
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [id, t] : tasks_)
      tasks[id] = {{"features", t.trace_features}, {"avg_runtime_s", t.avg_historical_runtime.value_or(0.0)}};
    return {{"format", kFormat},
            {"version", kVersion},
            {"target", std::string(to_string(target_))},
            {"training_rows", training_rows_},
            {"task_metrics", metric_names_},
            {"benchmarks", std::move(benchmarks)},
            {"rank_reference", reference_.values()},
            {"tasks", std::move(tasks)},
            {"tree", tree_.to_json()}};
  }

  static RecommenderModel from_json(const nlohmann::json& j) {
    RecommenderModel m;
    try {
      if (j.at("format").get<std::string>() != kFormat) fail(ErrorCode::ParseError, "not a reshi model document");
      if (j.at("version").get<int>() != kVersion)
        fail(ErrorCode::UnsupportedVersion, "model version " + j.at("version").dump());
      m.target_ = parse_target_mode(j.at("target").get<std::string>());
      m.training_rows_ = j.at("training_rows").get<std::size_t>();
      m.metric_names_ = j.at("task_metrics").get<std::vector<std::string>>();
      std::vector<BenchmarkColumn> benchmarks;
      for (const auto& b : j.at("benchmarks")) {
        auto o = b.at("orientation").get<std::string>();
        if (o != "higher" && o != "lower") fail(ErrorCode::ParseError, "bad orientation '" + o + "'");
        benchmarks.push_back({b.at("name").get<std::string>(),
                              o == "higher" ? Orientation::HigherIsBetter : Orientation::LowerIsBetter});
      }
      m.reference_ = RankReference(std::move(benchmarks), j.at("rank_reference").get<std::vector<std::vector<double>>>());
      for (const auto& [id, jt] : j.at("tasks").items()) {
        TaskDescriptor t;
        t.id = id;
        t.trace_features = jt.at("features").get<std::vector<double>>();
        t.avg_historical_runtime = jt.at("avg_runtime_s").get<double>();
        m.tasks_.emplace(id, std::move(t));
      }
      m.tree_ = RegressionTree::from_json(j.at("tree"));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, std::string("malformed model: ") + e.what());
    }
    if (m.tree_.dimensions() != m.metric_names_.size() + m.reference_.benchmarks().size())
      fail(ErrorCode::SchemaMismatch, "tree dimensionality does not match the feature schema");
    return m;
  }

 private:
  RegressionTree tree_;
  RankReference reference_;
  std::vector<std::string> metric_names_;
  TargetMode target_ = TargetMode::Normalized;
  std::map<std::string, TaskDescriptor> tasks_;
  std::size_t training_rows_ = 0;
};

}  // namespace reshi
