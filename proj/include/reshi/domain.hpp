#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reshi/error.hpp"

namespace reshi {

// Resource kinds are open-ended; these two are always compared.
inline constexpr const char* kCpus = "cpus";
inline constexpr const char* kMemory = "memory";

using Resources = std::map<std::string, double>;

inline double amount(const Resources& r, const std::string& kind) {
  auto it = r.find(kind);
  return it == r.end() ? 0.0 : it->second;
}

/// True when `capacity` covers every requested kind. Kinds absent from the
/// capacity map count as zero capacity.
inline bool covers(const Resources& capacity, const Resources& request) {
  return std::all_of(request.begin(), request.end(),
                     [&](const auto& kv) { return amount(capacity, kv.first) >= kv.second; });
}

struct TaskDescriptor {
  std::string id;
  Resources requests;
  std::optional<double> avg_historical_runtime;  // seconds
  std::vector<double> trace_features;
};

struct Edge {
  std::string from;
  std::string to;
  double data_volume = 0.0;  // bytes
};

namespace detail {

// Kahn's algorithm over index adjacency; ties resolved by smallest index.
// Returns the order, or the indices still blocked when a cycle exists.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kahn(
    std::size_t n, const std::vector<std::vector<std::size_t>>& succ) {
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& s : succ)
    for (auto v : s) ++indeg[v];
  std::set<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) frontier.insert(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!frontier.empty()) {
    auto u = *frontier.begin();
    frontier.erase(frontier.begin());
    order.push_back(u);
    for (auto v : succ[u])
      if (--indeg[v] == 0) frontier.insert(v);
  }
  std::vector<std::size_t> blocked;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] > 0) blocked.push_back(i);
  return {std::move(order), std::move(blocked)};
}

}  // namespace detail

/// Immutable workflow graph. Tasks are stored sorted by id, so task index
/// order and id order coincide.
class WorkflowDag {
 public:
  WorkflowDag() = default;

  WorkflowDag(std::string name, std::vector<std::string> metric_names, std::vector<TaskDescriptor> tasks,
              std::vector<Edge> edges)
      : name_(std::move(name)), metric_names_(std::move(metric_names)), tasks_(std::move(tasks)) {
    std::sort(tasks_.begin(), tasks_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const auto& t = tasks_[i];
      if (t.id.empty()) fail(ErrorCode::InvalidWorkflow, "task with empty id");
      if (!index_.emplace(t.id, i).second) fail(ErrorCode::InvalidWorkflow, "duplicate task id '" + t.id + "'");
      for (const auto& [kind, q] : t.requests)
        if (!(q >= 0.0)) fail(ErrorCode::InvalidWorkflow, "task '" + t.id + "' has negative request for " + kind);
      if (t.trace_features.size() != metric_names_.size())
        fail(ErrorCode::DimensionMismatch, "task '" + t.id + "' has " + std::to_string(t.trace_features.size()) +
                                               " trace features, expected " + std::to_string(metric_names_.size()));
      if (t.avg_historical_runtime && !(*t.avg_historical_runtime > 0.0))
        fail(ErrorCode::InvalidWorkflow, "task '" + t.id + "' has non-positive average runtime");
    }

    succ_.assign(tasks_.size(), {});
    pred_.assign(tasks_.size(), {});
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto& e : edges) {
      auto from = find(e.from);
      auto to = find(e.to);
      if (!from) fail(ErrorCode::UnknownTask, "edge references unknown task '" + e.from + "'");
      if (!to) fail(ErrorCode::UnknownTask, "edge references unknown task '" + e.to + "'");
      if (*from == *to) fail(ErrorCode::InvalidWorkflow, "self-edge on '" + e.from + "'");
      if (!(e.data_volume >= 0.0)) fail(ErrorCode::InvalidWorkflow, "negative data volume on " + e.from + "->" + e.to);
      if (!seen.emplace(*from, *to).second) fail(ErrorCode::DuplicateEdge, e.from + "->" + e.to);
      succ_[*from].push_back(*to);
      pred_[*to].push_back(*from);
      edges_.push_back(std::move(e));
    }
    for (auto& s : succ_) std::sort(s.begin(), s.end());
    for (auto& p : pred_) std::sort(p.begin(), p.end());
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
    for (const auto& e : edges_) volume_.emplace(std::pair{index_.at(e.from), index_.at(e.to)}, e.data_volume);

    auto [order, blocked] = detail::kahn(tasks_.size(), succ_);
    if (!blocked.empty()) {
      // every blocked task still has a blocked predecessor
      std::set<std::size_t> blocked_set(blocked.begin(), blocked.end());
      auto v = blocked.front();
      auto u = *std::find_if(pred_[v].begin(), pred_[v].end(), [&](auto p) { return blocked_set.count(p) > 0; });
      fail(ErrorCode::CycleDetected, "cycle through edge " + tasks_[u].id + "->" + tasks_[v].id);
    }
    topo_ = std::move(order);
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& metric_names() const noexcept { return metric_names_; }
  std::size_t size() const noexcept { return tasks_.size(); }
  bool empty() const noexcept { return tasks_.empty(); }
  const std::vector<TaskDescriptor>& tasks() const noexcept { return tasks_; }
  const TaskDescriptor& task(std::size_t i) const { return tasks_.at(i); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index_of(const std::string& id) const {
    auto i = find(id);
    if (!i) fail(ErrorCode::UnknownTask, "unknown task '" + id + "'");
    return *i;
  }

  const std::vector<std::size_t>& successors(std::size_t i) const { return succ_.at(i); }
  const std::vector<std::size_t>& predecessors(std::size_t i) const { return pred_.at(i); }
  double data_volume(std::size_t from, std::size_t to) const {
    auto it = volume_.find({from, to});
    return it == volume_.end() ? 0.0 : it->second;
  }
  /// Topological order of indices with ascending-id tie-break.
  const std::vector<std::size_t>& topological_indices() const noexcept { return topo_; }

 private:
  std::string name_;
  std::vector<std::string> metric_names_;
  std::vector<TaskDescriptor> tasks_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
  std::map<std::pair<std::size_t, std::size_t>, double> volume_;
  std::vector<std::size_t> topo_;
};

inline std::vector<std::string> topological_order(const WorkflowDag& dag) {
  std::vector<std::string> out;
  out.reserve(dag.size());
  for (auto i : dag.topological_indices()) out.push_back(dag.task(i).id);
  return out;
}

inline std::size_t children_count(const WorkflowDag& dag, const std::string& task_id) {
  return dag.successors(dag.index_of(task_id)).size();
}

inline std::set<std::string> ready_tasks(const WorkflowDag& dag, const std::set<std::string>& finished) {
  std::set<std::string> ready;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& id = dag.task(i).id;
    if (finished.count(id)) continue;
    const auto& preds = dag.predecessors(i);
    if (std::all_of(preds.begin(), preds.end(), [&](auto p) { return finished.count(dag.task(p).id) > 0; }))
      ready.insert(id);
  }
  return ready;
}

enum class Orientation { HigherIsBetter, LowerIsBetter };

struct BenchmarkColumn {
  std::string name;
  Orientation orientation = Orientation::HigherIsBetter;
};

struct NodeProfile {
  std::string id;
  std::string machine_type;
  Resources capacities;
  std::vector<double> benchmark_scores;
  std::vector<int> benchmark_ranks;  // empty until profiled
};

/// A set of nodes sorted by id, sharing one benchmark schema.
class Cluster {
 public:
  Cluster() = default;
  Cluster(std::vector<NodeProfile> nodes, std::vector<BenchmarkColumn> benchmarks)
      : nodes_(std::move(nodes)), benchmarks_(std::move(benchmarks)) {
    if (nodes_.empty()) fail(ErrorCode::InvalidArgument, "cluster has no nodes");
    std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.id.empty()) fail(ErrorCode::InvalidArgument, "node with empty id");
      if (i > 0 && nodes_[i - 1].id == n.id) fail(ErrorCode::InvalidArgument, "duplicate node id '" + n.id + "'");
      if (!(amount(n.capacities, kCpus) > 0.0) || !(amount(n.capacities, kMemory) > 0.0))
        fail(ErrorCode::InvalidArgument, "node '" + n.id + "' needs positive cpus and memory");
      if (n.benchmark_scores.size() != benchmarks_.size())
        fail(ErrorCode::DimensionMismatch, "node '" + n.id + "' has " + std::to_string(n.benchmark_scores.size()) +
                                               " benchmark scores, expected " + std::to_string(benchmarks_.size()));
    }
  }

  const std::vector<NodeProfile>& nodes() const noexcept { return nodes_; }
  const NodeProfile& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<BenchmarkColumn>& benchmarks() const noexcept { return benchmarks_; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id, [](const auto& n, const auto& v) { return n.id < v; });
    if (it == nodes_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  /// First node carrying each machine type, in machine-type order.
  std::map<std::string, const NodeProfile*> machine_types() const {
    std::map<std::string, const NodeProfile*> out;
    for (const auto& n : nodes_) out.emplace(n.machine_type, &n);
    return out;
  }

 private:
  std::vector<NodeProfile> nodes_;
  std::vector<BenchmarkColumn> benchmarks_;
};

/// Ground-truth runtimes keyed by (task id, machine type).
class RuntimeMatrix {
 public:
  void set(const std::string& task_id, const std::string& machine_type, double seconds) {
    if (!(seconds > 0.0))
      fail(ErrorCode::NonPositiveRuntime, "runtime for (" + task_id + ", " + machine_type + ") must be positive");
    values_[{task_id, machine_type}] = seconds;
  }

  std::optional<double> find(const std::string& task_id, const std::string& machine_type) const {
    auto it = values_.find({task_id, machine_type});
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  double lookup(const std::string& task_id, const std::string& machine_type) const {
    auto v = find(task_id, machine_type);
    if (!v) fail(ErrorCode::MissingRuntime, "no runtime for task '" + task_id + "' on machine type '" + machine_type + "'");
    return *v;
  }

  /// Uniform extrapolation of every entry.
  RuntimeMatrix scaled(double factor) const {
    if (!(factor > 0.0)) fail(ErrorCode::InvalidArgument, "runtime scale factor must be positive");
    RuntimeMatrix out;
    for (const auto& [k, v] : values_) out.values_[k] = v * factor;
    return out;
  }

  /// Fails with MissingRuntime on the first (task, machine type) pair absent.
  void require_complete(const WorkflowDag& dag, const Cluster& cluster) const {
    for (const auto& t : dag.tasks())
      for (const auto& [type, _] : cluster.machine_types()) lookup(t.id, type);
  }

  std::size_t size() const noexcept { return values_.size(); }
  const std::map<std::pair<std::string, std::string>, double>& entries() const noexcept { return values_; }

 private:
  std::map<std::pair<std::string, std::string>, double> values_;
};

inline double lookup_runtime(const RuntimeMatrix& matrix, const std::string& task_id, const NodeProfile& node) {
  return matrix.lookup(task_id, node.machine_type);
}

}  // namespace reshi
