#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "reshi/domain.hpp"
#include "reshi/error_model.hpp"
#include "reshi/schedulers.hpp"

namespace reshi {

enum class EventKind { TaskCompletion = 0, DispatchRound = 1 };

struct Event {
  Micros time = 0;
  EventKind kind = EventKind::DispatchRound;
  std::size_t task = 0;  // task index (id order); unused for dispatch rounds

  auto key() const { return std::tuple(time, static_cast<int>(kind), task); }
};

/// Min-queue ordered by (time, kind, task index).
class EventQueue {
 public:
  void push(Event e) { heap_.push(e); }
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.key() > b.key(); }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

struct SimulationOptions {
  double bandwidth = kUnlimitedBandwidth;  // bytes/s
};

struct TaskRecord {
  std::string task_id;
  std::string node_id;
  double start = 0.0;       // resources held from here
  double comm_wait = 0.0;   // input transfer before execution
  double finish = 0.0;
  double true_runtime = 0.0;
  double predicted_runtime = 0.0;  // as shown to the strategy for this node
};

struct DecisionLogEntry {
  double time = 0.0;
  std::string task_id;
  std::string node_id;
};

struct SimulationResult {
  std::string strategy;
  double makespan = 0.0;  // seconds
  std::vector<TaskRecord> tasks;  // in task id order
  std::vector<DecisionLogEntry> decisions;
};

/// Dense true runtimes for every (task, node) pair, one matrix lookup per
/// (task, machine type). Fails with MissingRuntime on the first absent pair.
inline PredictionTable true_runtimes(const WorkflowDag& dag, const Cluster& cluster, const RuntimeMatrix& matrix) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::size_t> type_of(cluster.size());
  for (std::size_t n = 0; n < cluster.size(); ++n)
    type_of[n] = slot.emplace(cluster.node(n).machine_type, slot.size()).first->second;
  std::vector<std::string> types(slot.size());
  for (const auto& [type, i] : slot) types[i] = type;

  PredictionTable table(dag.size(), cluster.size());
  std::vector<double> per_type(types.size());
  for (std::size_t t = 0; t < dag.size(); ++t) {
    for (const auto& [type, i] : slot) per_type[i] = matrix.lookup(dag.task(t).id, type);
    for (std::size_t n = 0; n < cluster.size(); ++n) table.set(t, n, per_type[type_of[n]]);
  }
  return table;
}

/// Injected predictions for every (task, node) pair. Samples are drawn once,
/// tasks in id order and nodes in id order, from one stream seeded by
/// `model.seed`, so every strategy run with the same seed sees the same values.
inline PredictionTable predict_runtimes(const PredictionTable& truth, const PredictionErrorModel& model) {
  model.validate();
  PredictionTable table(truth.tasks(), truth.nodes());
  Rng rng(model.seed);
  for (std::size_t t = 0; t < truth.tasks(); ++t)
    for (std::size_t n = 0; n < truth.nodes(); ++n) table.set(t, n, inject_error(truth.at(t, n), model, rng));
  return table;
}

inline PredictionTable predict_runtimes(const WorkflowDag& dag, const Cluster& cluster, const RuntimeMatrix& matrix,
                                        const PredictionErrorModel& model) {
  return predict_runtimes(true_runtimes(dag, cluster, matrix), model);
}

inline SimulationResult simulate(const WorkflowDag& dag, const Cluster& cluster, Strategy& strategy,
                                 const RuntimeMatrix& matrix, const PredictionErrorModel& error_model,
                                 const SimulationOptions& options = {}) {
  const auto truth = true_runtimes(dag, cluster, matrix);
  const ResourceLayout layout(dag, cluster);
  const auto predictions = predict_runtimes(truth, error_model);
  strategy.prepare(SchedulingContext{dag, cluster, layout, predictions, options.bandwidth});

  SimulationResult result;
  result.strategy = std::string(strategy.name());
  const std::size_t n_tasks = dag.size();
  if (n_tasks == 0) return result;

  std::vector<Micros> start(n_tasks, -1), finish(n_tasks, -1), wait(n_tasks, 0);
  std::vector<std::size_t> placed_on(n_tasks, 0);
  std::vector<std::size_t> pending(n_tasks);
  std::vector<char> is_ready(n_tasks, 0);
  std::vector<std::size_t> ready;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    pending[t] = dag.predecessors(t).size();
    if (pending[t] == 0) {
      ready.push_back(t);
      is_ready[t] = 1;
    }
  }

  ClusterState state(layout);
  EventQueue events;
  events.push({0, EventKind::DispatchRound, 0});
  std::size_t running = 0, done = 0;
  Micros last_round = -1;

  while (!events.empty()) {
    const Event ev = events.pop();
    const Micros now = ev.time;

    if (ev.kind == EventKind::TaskCompletion) {
      const auto t = ev.task;
      state.release(t, placed_on[t]);
      --running;
      ++done;
      std::vector<std::size_t> unlocked;
      for (auto c : dag.successors(t))
        if (--pending[c] == 0) unlocked.push_back(c);
      std::sort(unlocked.begin(), unlocked.end());
      for (auto c : unlocked) {
        ready.push_back(c);
        is_ready[c] = 1;
      }
      if (last_round != now) {
        events.push({now, EventKind::DispatchRound, 0});
        last_round = now;
      }
      continue;
    }

    last_round = now;
    for (;;) {
      auto d = strategy.next(DispatchView{now, ready, is_ready, state});
      if (!d) break;
      if (d->task >= n_tasks || !is_ready[d->task] || d->node >= cluster.size() || !state.fits(d->task, d->node))
        fail(ErrorCode::InvalidArgument, std::string(strategy.name()) + " emitted an infeasible decision");
      const auto t = d->task, n = d->node;
      Micros data_ready = now;
      for (auto p : dag.predecessors(t))
        if (placed_on[p] != n)
          data_ready = std::max(data_ready, finish[p] + transfer_micros(dag.data_volume(p, t), options.bandwidth));
      start[t] = now;
      wait[t] = data_ready - now;
      finish[t] = data_ready + duration_micros(truth.at(t, n));
      placed_on[t] = n;
      state.allocate(t, n);
      is_ready[t] = 0;
      ready.erase(std::find(ready.begin(), ready.end(), t));
      ++running;
      events.push({finish[t], EventKind::TaskCompletion, t});
      result.decisions.push_back({to_seconds(now), dag.task(t).id, cluster.node(n).id});
    }

    if (running == 0 && !ready.empty()) {
      // nothing will ever free resources again
      std::vector<std::size_t> stuck(ready.begin(), ready.end());
      std::sort(stuck.begin(), stuck.end());
      fail(ErrorCode::Deadlock, std::string(strategy.name()) + " cannot place task '" + dag.task(stuck.front()).id +
                                    "' and nothing is running");
    }
  }
  if (done != n_tasks) fail(ErrorCode::Deadlock, "simulation ended with unfinished tasks");

  Micros first = start[0], last = finish[0];
  for (std::size_t t = 0; t < n_tasks; ++t) {
    first = std::min(first, start[t]);
    last = std::max(last, finish[t]);
    const auto& node = cluster.node(placed_on[t]);
    result.tasks.push_back({dag.task(t).id, node.id, to_seconds(start[t]), to_seconds(wait[t]), to_seconds(finish[t]),
                            truth.at(t, placed_on[t]), predictions.at(t, placed_on[t])});
  }
  result.makespan = to_seconds(last - first);
  return result;
}

/// Post-hoc feasibility check of a finished simulation: precedence (including
/// transfer delays) and per-node capacity at every start instant. Returns one
/// message per violation.
inline std::vector<std::string> audit(const SimulationResult& result, const WorkflowDag& dag, const Cluster& cluster,
                                      const SimulationOptions& options = {}) {
  std::vector<std::string> issues;
  if (result.tasks.size() != dag.size()) {
    issues.push_back("result covers " + std::to_string(result.tasks.size()) + " of " + std::to_string(dag.size()) +
                     " tasks");
    return issues;
  }
  std::vector<std::size_t> node_of(dag.size());
  std::vector<Micros> start(dag.size()), exec(dag.size()), finish(dag.size());
  for (const auto& r : result.tasks) {
    auto t = dag.index_of(r.task_id);
    auto n = cluster.find(r.node_id);
    if (!n) {
      issues.push_back("task " + r.task_id + " on unknown node " + r.node_id);
      continue;
    }
    node_of[t] = *n;
    start[t] = to_micros(r.start);
    exec[t] = to_micros(r.start + r.comm_wait);
    finish[t] = to_micros(r.finish);
  }
  for (std::size_t t = 0; t < dag.size(); ++t)
    for (auto p : dag.predecessors(t)) {
      Micros arrival = finish[p] + (node_of[p] == node_of[t] ? 0 : transfer_micros(dag.data_volume(p, t), options.bandwidth));
      if (start[t] < finish[p] || exec[t] + 1 < arrival)
        issues.push_back("task " + dag.task(t).id + " starts before input from " + dag.task(p).id);
    }
  const ResourceLayout layout(dag, cluster);
  for (std::size_t t = 0; t < dag.size(); ++t) {
    const auto n = node_of[t];
    std::vector<double> used(layout.kinds(), 0.0);
    for (std::size_t u = 0; u < dag.size(); ++u) {
      if (node_of[u] != n || !(start[u] <= start[t] && start[t] < finish[u])) continue;
      auto r = layout.request(u);
      for (std::size_t k = 0; k < used.size(); ++k) used[k] += r[k];
    }
    if (!ResourceLayout::fits_within(used, layout.capacity(n)))
      issues.push_back("node " + cluster.node(n).id + " over capacity at t=" + std::to_string(to_seconds(start[t])));
  }
  return issues;
}

inline nlohmann::json to_json(const SimulationResult& r) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks)
    tasks.push_back({{"task_id", t.task_id}, {"node_id", t.node_id}, {"start_s", t.start}, {"comm_wait_s", t.comm_wait},
                     {"finish_s", t.finish}, {"true_runtime_s", t.true_runtime}, {"predicted_runtime_s", t.predicted_runtime}});
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : r.decisions) decisions.push_back({{"time_s", d.time}, {"task_id", d.task_id}, {"node_id", d.node_id}});
  return {{"format", "reshi-simulation"}, {"version", 1},         {"strategy", r.strategy},
          {"makespan_s", r.makespan},     {"tasks", std::move(tasks)}, {"decisions", std::move(decisions)}};
}

}  // namespace reshi
