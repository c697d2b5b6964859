#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reshi/domain.hpp"
#include "reshi/recommender.hpp"

namespace reshi {

// Simulated time is kept in integer microseconds.
using Micros = std::int64_t;

inline Micros to_micros(double seconds) {
  if (!std::isfinite(seconds)) return std::numeric_limits<Micros>::max() / 4;
  return static_cast<Micros>(std::llround(seconds * 1e6));
}
/// Durations never round down to zero.
inline Micros duration_micros(double seconds) { return std::max<Micros>(1, to_micros(seconds)); }
inline double to_seconds(Micros us) { return static_cast<double>(us) / 1e6; }

inline constexpr double kUnlimitedBandwidth = std::numeric_limits<double>::infinity();

/// Transfer time of an edge between different nodes.
inline Micros transfer_micros(double bytes, double bandwidth) {
  if (bytes <= 0.0 || std::isinf(bandwidth)) return 0;
  if (!(bandwidth > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth must be positive when edges carry data");
  return to_micros(bytes / bandwidth);
}

/// Dense resource vectors over the union of kinds used by a workflow and a cluster.
class ResourceLayout {
 public:
  ResourceLayout(const WorkflowDag& dag, const Cluster& cluster) {
    std::set<std::string> kinds{kCpus, kMemory};
    for (const auto& t : dag.tasks())
      for (const auto& [k, _] : t.requests) kinds.insert(k);
    for (const auto& n : cluster.nodes())
      for (const auto& [k, _] : n.capacities) kinds.insert(k);
    kinds_.assign(kinds.begin(), kinds.end());
    for (const auto& t : dag.tasks()) requests_.push_back(dense(t.requests));
    for (const auto& n : cluster.nodes()) capacities_.push_back(dense(n.capacities));
  }

  std::size_t kinds() const noexcept { return kinds_.size(); }
  std::size_t nodes() const noexcept { return capacities_.size(); }
  const std::string& kind(std::size_t k) const { return kinds_[k]; }
  std::span<const double> request(std::size_t task) const { return requests_[task]; }
  std::span<const double> capacity(std::size_t node) const { return capacities_[node]; }

  /// Static check against total capacity.
  bool can_ever_fit(std::size_t task, std::size_t node) const {
    return fits_within(request(task), capacity(node));
  }

  static bool fits_within(std::span<const double> req, std::span<const double> avail) {
    for (std::size_t k = 0; k < req.size(); ++k)
      if (req[k] > avail[k] + 1e-9 * std::max(1.0, std::abs(avail[k]))) return false;
    return true;
  }

 private:
  std::vector<double> dense(const Resources& r) const {
    std::vector<double> out;
    for (const auto& k : kinds_) out.push_back(amount(r, k));
    return out;
  }

  std::vector<std::string> kinds_;
  std::vector<std::vector<double>> requests_;
  std::vector<std::vector<double>> capacities_;
};

/// Currently free resources per node.
class ClusterState {
 public:
  explicit ClusterState(const ResourceLayout& layout) : layout_(&layout) {
    for (std::size_t n = 0; n < layout.nodes(); ++n) {
      auto c = layout.capacity(n);
      free_.emplace_back(c.begin(), c.end());
    }
  }

  std::size_t nodes() const noexcept { return free_.size(); }
  bool fits(std::size_t task, std::size_t node) const {
    return ResourceLayout::fits_within(layout_->request(task), free_[node]);
  }
  std::span<const double> free(std::size_t node) const { return free_[node]; }

  void allocate(std::size_t task, std::size_t node) {
    auto req = layout_->request(task);
    for (std::size_t k = 0; k < req.size(); ++k) free_[node][k] -= req[k];
  }
  void release(std::size_t task, std::size_t node) {
    auto req = layout_->request(task);
    auto cap = layout_->capacity(node);
    for (std::size_t k = 0; k < req.size(); ++k) free_[node][k] = std::min(cap[k], free_[node][k] + req[k]);
  }
  const ResourceLayout& layout() const noexcept { return *layout_; }

 private:
  const ResourceLayout* layout_;
  std::vector<std::vector<double>> free_;
};

/// Predicted runtimes in seconds for every (task index, node index) pair.
class PredictionTable {
 public:
  PredictionTable() = default;
  PredictionTable(std::size_t tasks, std::size_t nodes)
      : tasks_(tasks), nodes_(nodes), values_(tasks * nodes, std::numeric_limits<double>::quiet_NaN()) {}

  void set(std::size_t task, std::size_t node, double seconds) { values_.at(task * nodes_ + node) = seconds; }
  bool has(std::size_t task, std::size_t node) const {
    return task < tasks_ && node < nodes_ && !std::isnan(values_[task * nodes_ + node]);
  }
  double at(std::size_t task, std::size_t node) const {
    if (!has(task, node))
      fail(ErrorCode::MissingPrediction,
           "no prediction for task #" + std::to_string(task) + " on node #" + std::to_string(node));
    return values_[task * nodes_ + node];
  }
  std::size_t tasks() const noexcept { return tasks_; }
  std::size_t nodes() const noexcept { return nodes_; }

 private:
  std::size_t tasks_ = 0;
  std::size_t nodes_ = 0;
  std::vector<double> values_;
};

/// Everything a strategy may look at before the first dispatch round.
struct SchedulingContext {
  const WorkflowDag& dag;
  const Cluster& cluster;
  const ResourceLayout& layout;
  const PredictionTable& predictions;
  double bandwidth = kUnlimitedBandwidth;
};

struct Decision {
  std::size_t task;
  std::size_t node;
  bool operator==(const Decision&) const = default;
};

/// Read-only view handed to a strategy at each dispatch round.
struct DispatchView {
  Micros now = 0;
  std::span<const std::size_t> ready;  // order in which tasks became ready, ties by id
  std::span<const char> is_ready;      // indexed by task
  const ClusterState& state;
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string_view name() const = 0;
  /// Called once per simulation before time 0.
  virtual void prepare(const SchedulingContext& ctx) = 0;
  /// Next (task, node) to start now, or nullopt to wait for a completion.
  /// The simulator applies each returned decision before asking again.
  virtual std::optional<Decision> next(const DispatchView& view) = 0;
};

// ---------------------------------------------------------------------------
// Round-Robin

class RoundRobin final : public Strategy {
 public:
  std::string_view name() const override { return "rr"; }

  void prepare(const SchedulingContext& ctx) override {
    layout_ = &ctx.layout;
    dag_ = &ctx.dag;
    nodes_ = ctx.cluster.size();
    cursor_ = 0;
  }

  std::optional<Decision> next(const DispatchView& view) override {
    for (auto t : view.ready) {
      bool ever = false;
      for (std::size_t i = 0; i < nodes_; ++i) {
        const auto n = (cursor_ + i) % nodes_;
        if (!layout_->can_ever_fit(t, n)) continue;
        ever = true;
        if (view.state.fits(t, n)) {
          cursor_ = (n + 1) % nodes_;
          return Decision{t, n};
        }
      }
      if (!ever) fail(ErrorCode::NoFit, "task '" + dag_->task(t).id + "' does not fit on any node");
    }
    return std::nullopt;
  }

 private:
  const ResourceLayout* layout_ = nullptr;
  const WorkflowDag* dag_ = nullptr;
  std::size_t nodes_ = 0;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// MinMin

class MinMin final : public Strategy {
 public:
  std::string_view name() const override { return "minmin"; }

  void prepare(const SchedulingContext& ctx) override { predictions_ = &ctx.predictions; }

  /// Among ready tasks, the one whose fastest currently-fitting node is
  /// fastest overall; ties by (task id, node id).
  std::optional<Decision> next(const DispatchView& view) override {
    std::optional<Decision> best;
    double best_time = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> ready(view.ready.begin(), view.ready.end());
    std::sort(ready.begin(), ready.end());
    for (auto t : ready) {
      for (std::size_t n = 0; n < view.state.nodes(); ++n) {
        if (!view.state.fits(t, n)) continue;
        const double p = predictions_->at(t, n);
        if (p < best_time) {
          best_time = p;
          best = Decision{t, n};
        }
      }
    }
    return best;
  }

 private:
  const PredictionTable* predictions_ = nullptr;
};

// ---------------------------------------------------------------------------
// HEFT

struct PlannedTask {
  std::size_t node = 0;
  Micros start = 0;
  Micros finish = 0;
};

struct HeftPlan {
  std::vector<PlannedTask> tasks;    // indexed by task
  std::vector<std::size_t> order;    // processing order (descending upward rank)
  std::vector<double> upward_rank;   // seconds
  Micros makespan = 0;
};

namespace detail {

struct Interval {
  Micros start;
  Micros end;
  std::size_t task;
};

// Earliest start >= ready at which `req` fits on top of the placed intervals
// for the whole window [start, start + duration).
inline Micros earliest_slot(const std::vector<Interval>& placed, const ResourceLayout& layout, std::size_t task,
                            std::size_t node, Micros ready, Micros duration) {
  std::vector<Micros> candidates{ready};
  for (const auto& iv : placed)
    if (iv.end > ready) candidates.push_back(iv.end);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto req = layout.request(task);
  const auto cap = layout.capacity(node);
  std::vector<double> used(layout.kinds());
  for (auto c : candidates) {
    const Micros end = c + duration;
    std::vector<Micros> probes{c};
    for (const auto& iv : placed)
      if (iv.start > c && iv.start < end) probes.push_back(iv.start);
    bool ok = true;
    for (auto p : probes) {
      std::fill(used.begin(), used.end(), 0.0);
      for (const auto& iv : placed)
        if (iv.start <= p && p < iv.end) {
          auto r = layout.request(iv.task);
          for (std::size_t k = 0; k < used.size(); ++k) used[k] += r[k];
        }
      for (std::size_t k = 0; k < used.size(); ++k) used[k] += req[k];
      if (!ResourceLayout::fits_within(used, cap)) {
        ok = false;
        break;
      }
    }
    if (ok) return c;
  }
  return candidates.back();  // unreachable when the task fits the node at all
}

}  // namespace detail

/// Upward ranks: mean predicted runtime over the nodes that can hold the task,
/// plus the largest (transfer time + child rank) over its children.
inline std::vector<double> upward_ranks(const WorkflowDag& dag, const ResourceLayout& layout,
                                        const PredictionTable& predictions, double bandwidth) {
  std::vector<double> rank(dag.size(), 0.0);
  const auto& topo = dag.topological_indices();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const auto t = *it;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < predictions.nodes(); ++n) {
      if (!layout.can_ever_fit(t, n)) continue;
      sum += predictions.at(t, n);
      ++count;
    }
    if (count == 0) fail(ErrorCode::NoFit, "task '" + dag.task(t).id + "' does not fit on any node");
    double tail = 0.0;
    for (auto c : dag.successors(t))
      tail = std::max(tail, to_seconds(transfer_micros(dag.data_volume(t, c), bandwidth)) + rank[c]);
    rank[t] = sum / static_cast<double>(count) + tail;
  }
  return rank;
}

/// Static HEFT plan with insertion-based slot search. Nodes may host several
/// tasks at once as long as the summed requests fit.
inline HeftPlan heft(const WorkflowDag& dag, const Cluster& cluster, const PredictionTable& predictions,
                     double bandwidth = kUnlimitedBandwidth) {
  ResourceLayout layout(dag, cluster);
  HeftPlan plan;
  plan.upward_rank = upward_ranks(dag, layout, predictions, bandwidth);
  plan.order.resize(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) plan.order[i] = i;
  std::sort(plan.order.begin(), plan.order.end(), [&](auto a, auto b) {
    return plan.upward_rank[a] != plan.upward_rank[b] ? plan.upward_rank[a] > plan.upward_rank[b] : a < b;
  });

  plan.tasks.assign(dag.size(), PlannedTask{});
  std::vector<std::vector<detail::Interval>> timeline(cluster.size());
  for (auto t : plan.order) {
    std::optional<PlannedTask> best;
    for (std::size_t n = 0; n < cluster.size(); ++n) {
      if (!layout.can_ever_fit(t, n)) continue;
      Micros ready = 0;
      for (auto p : dag.predecessors(t)) {
        const auto& pp = plan.tasks[p];
        ready = std::max(ready, pp.finish + (pp.node == n ? 0 : transfer_micros(dag.data_volume(p, t), bandwidth)));
      }
      const Micros dur = duration_micros(predictions.at(t, n));
      const Micros start = detail::earliest_slot(timeline[n], layout, t, n, ready, dur);
      if (!best || start + dur < best->finish) best = PlannedTask{n, start, start + dur};
    }
    plan.tasks[t] = *best;
    timeline[best->node].push_back({best->start, best->finish, t});
    plan.makespan = std::max(plan.makespan, best->finish);
  }
  return plan;
}

/// Executes a HEFT plan: tasks stay on their planned node and each node starts
/// its tasks in planned-start order, as soon as they are ready and fit.
class Heft final : public Strategy {
 public:
  std::string_view name() const override { return "heft"; }

  void prepare(const SchedulingContext& ctx) override {
    plan_ = heft(ctx.dag, ctx.cluster, ctx.predictions, ctx.bandwidth);
    std::vector<std::size_t> rank_pos(ctx.dag.size());
    for (std::size_t i = 0; i < plan_.order.size(); ++i) rank_pos[plan_.order[i]] = i;
    queues_.assign(ctx.cluster.size(), {});
    for (std::size_t t = 0; t < ctx.dag.size(); ++t) queues_[plan_.tasks[t].node].push_back(t);
    for (auto& q : queues_)
      std::sort(q.begin(), q.end(), [&](auto a, auto b) {
        const auto& pa = plan_.tasks[a];
        const auto& pb = plan_.tasks[b];
        return pa.start != pb.start ? pa.start < pb.start : rank_pos[a] < rank_pos[b];
      });
    heads_.assign(ctx.cluster.size(), 0);
  }

  std::optional<Decision> next(const DispatchView& view) override {
    for (std::size_t n = 0; n < queues_.size(); ++n) {
      if (heads_[n] >= queues_[n].size()) continue;
      const auto t = queues_[n][heads_[n]];
      if (view.is_ready[t] && view.state.fits(t, n)) {
        ++heads_[n];
        return Decision{t, n};
      }
    }
    return std::nullopt;
  }

  const HeftPlan& plan() const noexcept { return plan_; }

 private:
  HeftPlan plan_;
  std::vector<std::vector<std::size_t>> queues_;
  std::vector<std::size_t> heads_;
};

// ---------------------------------------------------------------------------
// Reshi-C / Reshi-M

/// Rank-driven dispatch: ready tasks in priority order, each placed on the
/// best node of its priority list that currently fits. Never reads predicted
/// runtimes.
class ReshiStrategy : public Strategy {
 public:
  explicit ReshiStrategy(std::shared_ptr<const RecommenderModel> model) : model_(std::move(model)) {
    if (!model_) fail(ErrorCode::InvalidArgument, "Reshi strategies need a recommender model");
  }

  void prepare(const SchedulingContext& ctx) override {
    model_->check_metrics(ctx.dag.metric_names());
    const auto profiled = model_->profile(ctx.cluster);
    lists_.assign(ctx.dag.size(), {});
    for (std::size_t t = 0; t < ctx.dag.size(); ++t) {
      auto p = model_->rank(ctx.dag.task(t), profiled);
      for (const auto& e : p.entries) lists_[t].push_back(*ctx.cluster.find(e.node_id));
    }
    priority_ = task_priority(ctx.dag, *model_);
  }

  std::optional<Decision> next(const DispatchView& view) override {
    std::vector<std::size_t> queue(view.ready.begin(), view.ready.end());
    std::sort(queue.begin(), queue.end(), [&](auto a, auto b) {
      return priority_[a] != priority_[b] ? priority_[a] > priority_[b] : a < b;
    });
    for (auto t : queue)
      for (auto n : lists_[t])
        if (view.state.fits(t, n)) return Decision{t, n};
    return std::nullopt;
  }

  const std::vector<std::vector<std::size_t>>& priority_lists() const noexcept { return lists_; }

 protected:
  /// Larger value = dispatched earlier.
  virtual std::vector<double> task_priority(const WorkflowDag& dag, const RecommenderModel& model) const = 0;

 private:
  std::shared_ptr<const RecommenderModel> model_;
  std::vector<std::vector<std::size_t>> lists_;
  std::vector<double> priority_;
};

/// Prefers tasks with many direct children.
class ReshiC final : public ReshiStrategy {
 public:
  using ReshiStrategy::ReshiStrategy;
  std::string_view name() const override { return "reshi-c"; }

 protected:
  std::vector<double> task_priority(const WorkflowDag& dag, const RecommenderModel&) const override {
    std::vector<double> p(dag.size());
    for (std::size_t t = 0; t < dag.size(); ++t) p[t] = static_cast<double>(dag.successors(t).size());
    return p;
  }
};

/// Prefers tasks with the longest average historical runtime.
class ReshiM final : public ReshiStrategy {
 public:
  using ReshiStrategy::ReshiStrategy;
  std::string_view name() const override { return "reshi-m"; }

 protected:
  /// Falls back to the trace average stored in the model when the workflow
  /// file carries none.
  std::vector<double> task_priority(const WorkflowDag& dag, const RecommenderModel& model) const override {
    std::vector<double> p(dag.size());
    for (std::size_t t = 0; t < dag.size(); ++t) {
      auto avg = dag.task(t).avg_historical_runtime;
      if (!avg) {
        auto it = model.tasks().find(dag.task(t).id);
        if (it != model.tasks().end()) avg = it->second.avg_historical_runtime;
      }
      if (!avg) fail(ErrorCode::MissingHistoricalRuntime, "task '" + dag.task(t).id + "' has no average runtime");
      p[t] = *avg;
    }
    return p;
  }
};

inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"rr", "minmin", "heft", "reshi-c", "reshi-m"};
  return names;
}

inline bool is_reshi(std::string_view name) { return name == "reshi-c" || name == "reshi-m"; }

inline std::unique_ptr<Strategy> make_strategy(std::string_view name,
                                               std::shared_ptr<const RecommenderModel> model = nullptr) {
  if (name == "rr") return std::make_unique<RoundRobin>();
  if (name == "minmin") return std::make_unique<MinMin>();
  if (name == "heft") return std::make_unique<Heft>();
  if (name == "reshi-c") return std::make_unique<ReshiC>(std::move(model));
  if (name == "reshi-m") return std::make_unique<ReshiM>(std::move(model));
  fail(ErrorCode::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

}  // namespace reshi
