#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "reshi/csv.hpp"
#include "reshi/domain.hpp"
#include "reshi/error.hpp"

namespace reshi {

/// A cluster whose nodes carry dense per-feature ranks (1 = best).
class ProfiledCluster {
 public:
  ProfiledCluster() = default;

  const Cluster& cluster() const noexcept { return cluster_; }
  const std::vector<NodeProfile>& nodes() const noexcept { return cluster_.nodes(); }
  const NodeProfile& node(std::size_t i) const { return cluster_.node(i); }
  std::size_t size() const noexcept { return cluster_.size(); }
  const std::vector<BenchmarkColumn>& benchmarks() const noexcept { return cluster_.benchmarks(); }
  std::size_t feature_count() const noexcept { return cluster_.benchmarks().size(); }

 private:
  friend ProfiledCluster rank_features(const Cluster&, std::span<const Orientation>);
  friend class RankReference;
  explicit ProfiledCluster(Cluster c) : cluster_(std::move(c)) {}
  Cluster cluster_;
};

inline bool better(Orientation o, double a, double b) {
  return o == Orientation::HigherIsBetter ? a > b : a < b;
}

/// Dense per-feature ranking: ties share a rank, the next distinct value gets
/// rank + 1. Raw scores are retained. The orientations become the cluster's
/// benchmark orientations.
inline ProfiledCluster rank_features(const Cluster& cluster, std::span<const Orientation> orientations) {
  const auto w = cluster.benchmarks().size();
  if (orientations.size() != w)
    fail(ErrorCode::DimensionMismatch,
         "got " + std::to_string(orientations.size()) + " orientations for " + std::to_string(w) + " features");
  auto benchmarks = cluster.benchmarks();
  for (std::size_t f = 0; f < w; ++f) benchmarks[f].orientation = orientations[f];
  auto nodes = cluster.nodes();
  for (auto& n : nodes) {
    if (n.benchmark_scores.size() != w)
      fail(ErrorCode::DimensionMismatch, "node '" + n.id + "' has " + std::to_string(n.benchmark_scores.size()) +
                                             " scores, expected " + std::to_string(w));
    n.benchmark_ranks.assign(w, 0);
  }
  for (std::size_t f = 0; f < w; ++f) {
    std::vector<double> distinct;
    for (const auto& n : nodes) distinct.push_back(n.benchmark_scores[f]);
    std::sort(distinct.begin(), distinct.end(), [&](double a, double b) { return better(orientations[f], a, b); });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (auto& n : nodes) {
      auto pos = std::lower_bound(distinct.begin(), distinct.end(), n.benchmark_scores[f],
                                  [&](double a, double b) { return better(orientations[f], a, b); });
      n.benchmark_ranks[f] = static_cast<int>(pos - distinct.begin()) + 1;
    }
  }
  return ProfiledCluster(Cluster(std::move(nodes), std::move(benchmarks)));
}

inline ProfiledCluster rank_features(const Cluster& cluster) {
  std::vector<Orientation> o;
  for (const auto& b : cluster.benchmarks()) o.push_back(b.orientation);
  return rank_features(cluster, o);
}

/// Ranks frozen from a profiled cluster, used to place nodes of another
/// cluster on the same scale. A score gets 1 + the number of distinct
/// reference scores strictly better than it, which equals its dense rank when
/// the score occurs in the reference.
class RankReference {
 public:
  RankReference() = default;

  explicit RankReference(const ProfiledCluster& profiled) : benchmarks_(profiled.benchmarks()) {
    values_.resize(benchmarks_.size());
    for (std::size_t f = 0; f < benchmarks_.size(); ++f) {
      for (const auto& n : profiled.nodes()) values_[f].push_back(n.benchmark_scores[f]);
      auto o = benchmarks_[f].orientation;
      std::sort(values_[f].begin(), values_[f].end(), [&](double a, double b) { return better(o, a, b); });
      values_[f].erase(std::unique(values_[f].begin(), values_[f].end()), values_[f].end());
    }
  }

  RankReference(std::vector<BenchmarkColumn> benchmarks, std::vector<std::vector<double>> values)
      : benchmarks_(std::move(benchmarks)), values_(std::move(values)) {
    if (values_.size() != benchmarks_.size()) fail(ErrorCode::DimensionMismatch, "rank reference shape");
  }

  int rank(std::size_t feature, double score) const {
    const auto& v = values_.at(feature);
    auto o = benchmarks_[feature].orientation;
    auto pos = std::lower_bound(v.begin(), v.end(), score, [&](double a, double b) { return better(o, a, b); });
    return static_cast<int>(pos - v.begin()) + 1;
  }

  /// Checks that `cluster` uses the same benchmark names, order and orientation.
  void check_schema(const Cluster& cluster) const {
    const auto& b = cluster.benchmarks();
    if (b.size() != benchmarks_.size())
      fail(ErrorCode::SchemaMismatch, "cluster has " + std::to_string(b.size()) + " benchmarks, model expects " +
                                          std::to_string(benchmarks_.size()));
    for (std::size_t f = 0; f < b.size(); ++f)
      if (b[f].name != benchmarks_[f].name || b[f].orientation != benchmarks_[f].orientation)
        fail(ErrorCode::SchemaMismatch, "benchmark column " + std::to_string(f) + " is '" + b[f].name +
                                            "', model expects '" + benchmarks_[f].name + "'");
  }

  ProfiledCluster apply(const Cluster& cluster) const {
    check_schema(cluster);
    auto nodes = cluster.nodes();
    for (auto& n : nodes) {
      n.benchmark_ranks.resize(values_.size());
      for (std::size_t f = 0; f < values_.size(); ++f) n.benchmark_ranks[f] = rank(f, n.benchmark_scores[f]);
    }
    return ProfiledCluster(Cluster(std::move(nodes), cluster.benchmarks()));
  }

  const std::vector<BenchmarkColumn>& benchmarks() const noexcept { return benchmarks_; }
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }

 private:
  std::vector<BenchmarkColumn> benchmarks_;
  std::vector<std::vector<double>> values_;
};

// ---------------------------------------------------------------------------
// Node profile file

inline constexpr const char* kProfilesFormat = "reshi-profiles";
inline constexpr int kProfilesVersion = 1;

inline std::string_view to_string(Orientation o) { return o == Orientation::HigherIsBetter ? "higher" : "lower"; }

inline Cluster parse_profiles(std::istream& in, const std::string& source = "<profiles>") {
  csv::Reader r(in, source);
  r.expect_header(kProfilesFormat, kProfilesVersion);
  std::vector<std::string> header, orient, f;
  if (!r.next(header)) fail(ErrorCode::EmptyDataset, source + ": missing column header");
  static const std::vector<std::string> fixed = {"id", "machine_type", "cpus", "memory_bytes"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    r.error("", "header must start with id,machine_type,cpus,memory_bytes");
  if (!r.next(orient) || orient.empty() || orient[0] != "orientation")
    r.error("", "expected 'orientation' row after the column header");
  if (orient.size() != header.size()) r.error("", "orientation row width differs from header");

  std::vector<BenchmarkColumn> benchmarks;
  for (std::size_t c = fixed.size(); c < header.size(); ++c) {
    BenchmarkColumn b{header[c], Orientation::HigherIsBetter};
    if (orient[c] == "higher") b.orientation = Orientation::HigherIsBetter;
    else if (orient[c] == "lower") b.orientation = Orientation::LowerIsBetter;
    else r.error(header[c], "orientation must be 'higher' or 'lower'");
    benchmarks.push_back(std::move(b));
  }

  std::vector<NodeProfile> nodes;
  while (r.next(f)) {
    if (f.size() != header.size())
      r.error("", "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    NodeProfile n;
    n.id = f[0];
    n.machine_type = f[1];
    if (n.id.empty()) r.error("id", "empty node id");
    if (n.machine_type.empty()) r.error("machine_type", "empty machine type");
    n.capacities[kCpus] = r.number(f[2], "cpus");
    n.capacities[kMemory] = r.number(f[3], "memory_bytes");
    if (!(n.capacities[kCpus] > 0)) r.error("cpus", "capacity must be positive");
    if (!(n.capacities[kMemory] > 0)) r.error("memory_bytes", "capacity must be positive");
    for (std::size_t c = fixed.size(); c < header.size(); ++c) n.benchmark_scores.push_back(r.number(f[c], header[c]));
    nodes.push_back(std::move(n));
  }
  if (nodes.empty()) fail(ErrorCode::EmptyDataset, source + ": no node rows");
  return Cluster(std::move(nodes), std::move(benchmarks));
}

inline Cluster load_profiles(const std::string& path) {
  auto in = csv::open_input(path);
  return parse_profiles(in, path);
}

inline void write_profiles(std::ostream& out, const Cluster& cluster) {
  out << '#' << kProfilesFormat << ",v" << kProfilesVersion << '\n';
  out << "id,machine_type,cpus,memory_bytes";
  for (const auto& b : cluster.benchmarks()) out << ',' << b.name;
  out << "\norientation,,,";
  for (const auto& b : cluster.benchmarks()) out << ',' << to_string(b.orientation);
  out << '\n';
  for (const auto& n : cluster.nodes()) {
    out << n.id << ',' << n.machine_type << ',' << csv::format_double(amount(n.capacities, kCpus)) << ','
        << csv::format_double(amount(n.capacities, kMemory));
    for (double s : n.benchmark_scores) out << ',' << csv::format_double(s);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Task traces

struct TaskTraceRecord {
  std::string task_id;
  std::string machine_type;
  double runtime = 0.0;  // seconds
  std::vector<double> metrics;
};

struct TraceSet {
  std::vector<std::string> metric_names;
  std::vector<TaskTraceRecord> records;
};

inline constexpr const char* kTracesFormat = "reshi-traces";
inline constexpr int kTracesVersion = 1;

inline TraceSet parse_traces(std::istream& in, const std::string& source = "<traces>") {
  csv::Reader r(in, source);
  r.expect_header(kTracesFormat, kTracesVersion);
  std::vector<std::string> header, f;
  if (!r.next(header)) fail(ErrorCode::EmptyDataset, source + ": missing column header");
  static const std::vector<std::string> fixed = {"task_id", "machine_type", "runtime_s"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    r.error("", "header must start with task_id,machine_type,runtime_s");

  TraceSet set;
  set.metric_names.assign(header.begin() + fixed.size(), header.end());
  while (r.next(f)) {
    if (f.size() != header.size())
      r.error("", "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    TaskTraceRecord rec;
    rec.task_id = f[0];
    rec.machine_type = f[1];
    if (rec.task_id.empty()) r.error("task_id", "empty task id");
    if (rec.machine_type.empty()) r.error("machine_type", "empty machine type");
    rec.runtime = r.number(f[2], "runtime_s");
    if (!(rec.runtime > 0.0)) r.error("runtime_s", "non-positive runtime");
    for (std::size_t c = fixed.size(); c < header.size(); ++c) rec.metrics.push_back(r.number(f[c], header[c]));
    set.records.push_back(std::move(rec));
  }
  if (set.records.empty()) fail(ErrorCode::EmptyDataset, source + ": no trace rows");
  return set;
}

inline TraceSet load_traces(const std::string& path) {
  auto in = csv::open_input(path);
  return parse_traces(in, path);
}

inline void write_traces(std::ostream& out, const TraceSet& traces) {
  out << '#' << kTracesFormat << ",v" << kTracesVersion << '\n';
  out << "task_id,machine_type,runtime_s";
  for (const auto& m : traces.metric_names) out << ',' << m;
  out << '\n';
  for (const auto& rec : traces.records) {
    out << rec.task_id << ',' << rec.machine_type << ',' << csv::format_double(rec.runtime);
    for (double m : rec.metrics) out << ',' << csv::format_double(m);
    out << '\n';
  }
}

/// Per-task summary of the traces: mean metrics and mean runtime. Requests
/// are unknown from traces alone and left empty.
inline std::map<std::string, TaskDescriptor> task_catalog_from_traces(const TraceSet& traces) {
  std::map<std::string, TaskDescriptor> out;
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : traces.records) {
    auto& t = out[rec.task_id];
    if (t.id.empty()) {
      t.id = rec.task_id;
      t.trace_features.assign(rec.metrics.size(), 0.0);
      t.avg_historical_runtime = 0.0;
    }
    if (rec.metrics.size() != t.trace_features.size())
      fail(ErrorCode::DimensionMismatch, "traces of '" + rec.task_id + "' disagree on the metric count");
    for (std::size_t i = 0; i < rec.metrics.size(); ++i) t.trace_features[i] += rec.metrics[i];
    *t.avg_historical_runtime += rec.runtime;
    ++counts[rec.task_id];
  }
  for (auto& [id, t] : out) {
    auto n = static_cast<double>(counts[id]);
    for (auto& m : t.trace_features) m /= n;
    *t.avg_historical_runtime /= n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training set

/// How trace runtimes become regression targets.
enum class TargetMode {
  Normalized,  // runtime / fastest observed runtime of the same task
  Raw,         // runtime in seconds
};

inline std::string_view to_string(TargetMode m) { return m == TargetMode::Normalized ? "normalized" : "raw"; }

inline TargetMode parse_target_mode(std::string_view s) {
  if (s == "normalized") return TargetMode::Normalized;
  if (s == "raw") return TargetMode::Raw;
  fail(ErrorCode::InvalidArgument, "unknown target mode '" + std::string(s) + "'");
}

/// Dense row-major matrix.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void push_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) cols_ = values.size();
    if (values.size() != cols_) fail(ErrorCode::DimensionMismatch, "row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TrainingSet {
  DesignMatrix features;  // n x (v + w)
  std::vector<double> targets;
  std::vector<std::string> feature_names;  // task metrics first, then node benchmarks
  std::vector<std::pair<std::string, std::string>> row_keys;  // (task id, machine type)
};

/// Feature vector c_ij: the task's v metrics followed by the node's w ranks.
inline std::vector<double> combine_features(std::span<const double> task_metrics, const NodeProfile& node) {
  std::vector<double> c(task_metrics.begin(), task_metrics.end());
  for (int r : node.benchmark_ranks) c.push_back(static_cast<double>(r));
  return c;
}

inline TrainingSet build_training_set(const TraceSet& traces, const ProfiledCluster& profiled,
                                      const std::map<std::string, TaskDescriptor>& task_catalog,
                                      TargetMode mode = TargetMode::Normalized) {
  if (traces.records.empty()) fail(ErrorCode::EmptyDataset, "no trace records");
  const auto types = profiled.cluster().machine_types();
  const auto v = traces.metric_names.size();

  std::vector<std::size_t> order(traces.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    const auto& ra = traces.records[a];
    const auto& rb = traces.records[b];
    return std::tie(ra.task_id, ra.machine_type) < std::tie(rb.task_id, rb.machine_type);
  });

  std::map<std::string, double> fastest;
  for (const auto& rec : traces.records) {
    if (!types.count(rec.machine_type))
      fail(ErrorCode::UnknownMachineType, "trace of '" + rec.task_id + "' uses unknown machine type '" +
                                              rec.machine_type + "'");
    if (!task_catalog.count(rec.task_id))
      fail(ErrorCode::UnknownTask, "trace references task '" + rec.task_id + "' missing from the task catalog");
    if (rec.metrics.size() != v)
      fail(ErrorCode::DimensionMismatch, "trace of '" + rec.task_id + "' has " + std::to_string(rec.metrics.size()) +
                                             " metrics, expected " + std::to_string(v));
    if (!(rec.runtime > 0.0)) fail(ErrorCode::NonPositiveRuntime, "trace of '" + rec.task_id + "'");
    auto [it, inserted] = fastest.emplace(rec.task_id, rec.runtime);
    if (!inserted) it->second = std::min(it->second, rec.runtime);
  }

  TrainingSet set;
  set.feature_names = traces.metric_names;
  for (const auto& b : profiled.benchmarks()) set.feature_names.push_back(b.name);
  for (auto i : order) {
    const auto& rec = traces.records[i];
    set.features.push_row(combine_features(rec.metrics, *types.at(rec.machine_type)));
    set.targets.push_back(mode == TargetMode::Normalized ? rec.runtime / fastest.at(rec.task_id) : rec.runtime);
    set.row_keys.emplace_back(rec.task_id, rec.machine_type);
  }
  return set;
}

}  // namespace reshi
