#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reshi/domain.hpp"
#include "reshi/error_model.hpp"
#include "reshi/experiment.hpp"
#include "reshi/profiling.hpp"
#include "reshi/workflow_io.hpp"

// Synthetic but plausible inputs: a 27-type instance catalog with CPU,
// memory and storage benchmark scores, three bioinformatics-shaped
// workflows, a runtime matrix whose values follow the catalog's hardware
// characteristics with multiplicative noise, and trace records per
// (task, machine type).
namespace reshi::fixtures {

struct FixtureOptions {
  std::size_t samples = 30;        // per-sample task chains in each workflow
  std::size_t runs_per_type = 1;   // trace rows per (task, machine type)
  double runtime_noise = 0.10;     // sd of the multiplicative matrix noise
  double trace_noise = 0.03;       // run-to-run noise in traces
  std::uint64_t seed = 7;
};

inline constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

struct Family {
  const char* name;
  double core_speed;    // relative single-core throughput
  double mem_per_vcpu;  // GiB
  double mem_bw;        // relative memory bandwidth
  double io;            // relative storage throughput
};

inline const std::vector<Family>& families() {
  static const std::vector<Family> f{
      {"c5", 1.25, 2, 1.15, 1.0},  {"c6i", 1.40, 2, 1.30, 1.1}, {"m5", 1.10, 4, 1.00, 1.0},
      {"m6i", 1.22, 4, 1.18, 1.1}, {"r5", 1.05, 8, 1.05, 1.0},  {"r6i", 1.18, 8, 1.22, 1.1},
      {"i3", 0.95, 7.6, 0.95, 3.5}, {"t3", 0.80, 4, 0.80, 0.7}, {"a1", 0.60, 2, 0.70, 0.8},
  };
  return f;
}

struct Size {
  const char* name;
  int vcpus;
};

inline const std::vector<Size>& sizes() {
  static const std::vector<Size> s{{"large", 2}, {"xlarge", 4}, {"2xlarge", 8}};
  return s;
}

/// Hidden hardware traits of a catalog type, used to synthesize runtimes.
struct Hardware {
  double core_speed;
  double mem_bw;
  double io;
};

inline std::vector<BenchmarkColumn> benchmark_columns() {
  using O = Orientation;
  return {{"jtr_hashes_per_s", O::HigherIsBetter},   {"blk_build_s", O::LowerIsBetter},
          {"ramspeed_triad_mbps", O::HigherIsBetter}, {"stream_copy_mbps", O::HigherIsBetter},
          {"fio_seq_read_mbps", O::HigherIsBetter},   {"fio_seq_write_mbps", O::HigherIsBetter},
          {"fio_rand_read_iops", O::HigherIsBetter},  {"fio_rand_write_iops", O::HigherIsBetter}};
}

inline std::vector<std::string> metric_names() {
  return {"cpu_usage_pct", "bytes_read", "bytes_written", "peak_memory_bytes", "avg_memory_bytes"};
}

inline Hardware hardware_of(const Family& f, const Size& s) {
  const double scale = std::log2(static_cast<double>(s.vcpus) / 2.0);  // 0, 1, 2
  return {f.core_speed, f.mem_bw * (1.0 + 0.12 * scale), f.io * (1.0 + 0.25 * scale)};
}

/// One profile row per machine type; node id equals the machine type.
inline Cluster catalog(std::uint64_t seed = 7) {
  Rng rng(derive_seed(seed, hash_string("catalog")));
  std::normal_distribution<double> jitter(0.0, 0.02);
  auto j = [&] { return 1.0 + jitter(rng); };
  std::vector<NodeProfile> nodes;
  for (const auto& f : families())
    for (const auto& s : sizes()) {
      const auto hw = hardware_of(f, s);
      const double v = s.vcpus;
      NodeProfile n;
      n.machine_type = std::string(f.name) + "." + s.name;
      n.id = n.machine_type;
      n.capacities[kCpus] = v;
      n.capacities[kMemory] = std::round(f.mem_per_vcpu * v) * kGiB;
      n.benchmark_scores = {
          2.0e6 * hw.core_speed * v * j(),
          900.0 / (hw.core_speed * std::pow(v, 0.85)) * j(),
          12000.0 * hw.mem_bw * j(),
          11000.0 * hw.mem_bw * j(),
          250.0 * hw.io * j(),
          200.0 * hw.io * j(),
          3000.0 * hw.io * j(),
          2800.0 * hw.io * j(),
      };
      nodes.push_back(std::move(n));
    }
  return Cluster(std::move(nodes), benchmark_columns());
}

inline Hardware hardware_of_type(const std::string& machine_type) {
  for (const auto& f : families())
    for (const auto& s : sizes())
      if (machine_type == std::string(f.name) + "." + s.name) return hardware_of(f, s);
  fail(ErrorCode::UnknownMachineType, "no fixture hardware for '" + machine_type + "'");
}

/// Abstract workflow step; every sample instantiates it once unless `shared`.
struct Process {
  const char* name;
  double cpus;
  double memory_gib;
  double base_runtime;  // seconds on the reference machine
  double cpu_w, mem_w, io_w;
  std::vector<const char*> inputs;  // upstream processes
  bool shared = false;              // single instance for the whole run
};

struct WorkflowShape {
  const char* name;
  std::vector<Process> processes;
};

inline std::vector<WorkflowShape> workflow_shapes() {
  return {
      {"chipseq",
       {
           {"fastqc", 1, 2, 120, 0.7, 0.1, 0.2, {}},
           {"trim", 2, 2, 300, 0.6, 0.1, 0.3, {}},
           {"align", 8, 12, 2400, 0.85, 0.1, 0.05, {"trim"}},
           {"sort", 2, 6, 600, 0.3, 0.3, 0.4, {"align"}},
           {"markdup", 2, 14, 900, 0.25, 0.6, 0.15, {"sort"}},
           {"filter", 2, 4, 420, 0.3, 0.2, 0.5, {"markdup"}},
           {"bigwig", 1, 4, 360, 0.3, 0.2, 0.5, {"filter"}},
           {"peakcall", 2, 8, 1500, 0.55, 0.35, 0.1, {"filter"}},
           {"consensus", 2, 8, 900, 0.4, 0.4, 0.2, {"peakcall"}, true},
           {"annotate", 1, 4, 600, 0.5, 0.3, 0.2, {"consensus"}, true},
           {"multiqc", 1, 2, 240, 0.4, 0.2, 0.4, {"fastqc", "bigwig", "annotate"}, true},
       }},
      {"eager",
       {
           {"adapter_removal", 4, 4, 900, 0.7, 0.1, 0.2, {}},
           {"fastqc", 1, 2, 150, 0.7, 0.1, 0.2, {}},
           {"mapping", 8, 16, 3600, 0.8, 0.15, 0.05, {"adapter_removal"}},
           {"fastqc_after", 1, 2, 150, 0.7, 0.1, 0.2, {"adapter_removal"}},
       }},
      {"viralrecon",
       {
           {"build_index", 4, 8, 600, 0.7, 0.2, 0.1, {}, true},
           {"fastp", 4, 4, 420, 0.6, 0.1, 0.3, {}},
           {"kraken", 8, 24, 1200, 0.3, 0.6, 0.1, {"fastp"}},
           {"bowtie2", 8, 8, 1800, 0.85, 0.1, 0.05, {"fastp", "build_index"}},
           {"ivar_trim", 2, 4, 300, 0.4, 0.2, 0.4, {"bowtie2"}},
           {"variants", 2, 8, 600, 0.5, 0.4, 0.1, {"ivar_trim"}},
           {"consensus", 1, 4, 240, 0.4, 0.3, 0.3, {"variants"}},
           {"multiqc", 1, 2, 240, 0.4, 0.2, 0.4, {"consensus", "kraken"}, true},
       }},
  };
}

/// Runtime of one task on given hardware, before noise. The reference
/// machine (all traits 1.0) reproduces `base`.
inline double ideal_runtime(double base, const Process& p, const Hardware& hw) {
  return base * (p.cpu_w / hw.core_speed + p.mem_w / hw.mem_bw + p.io_w / hw.io);
}

struct WorkflowFixture {
  WorkflowDag dag;
  RuntimeMatrix runtimes;
  TraceSet traces;
};

inline WorkflowFixture make_workflow(const WorkflowShape& shape, const Cluster& catalog, const FixtureOptions& opt) {
  Rng rng(derive_seed(opt.seed, hash_string(shape.name)));
  std::uniform_real_distribution<double> sample_scale(0.6, 1.4);
  std::normal_distribution<double> unit(0.0, 1.0);

  struct Instance {
    std::string id;
    const Process* process;
    double base;
  };
  std::vector<Instance> instances;
  std::vector<Edge> edges;
  auto instance_id = [&](const Process& p, std::size_t s) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02zu", s);
    return std::string(shape.name) + "." + p.name + (p.shared ? "" : std::string(".s") + buf);
  };
  auto find_process = [&](const char* name) -> const Process& {
    for (const auto& p : shape.processes)
      if (std::string(p.name) == name) return p;
    fail(ErrorCode::InvalidArgument, std::string("unknown process ") + name);
  };

  std::vector<double> scales(opt.samples);
  for (auto& s : scales) s = sample_scale(rng);
  for (const auto& p : shape.processes) {
    if (p.shared) {
      instances.push_back({instance_id(p, 0), &p, p.base_runtime});
    } else {
      for (std::size_t s = 0; s < opt.samples; ++s) instances.push_back({instance_id(p, s), &p, p.base_runtime * scales[s]});
    }
    for (const char* in : p.inputs) {
      const auto& up = find_process(in);
      for (std::size_t s = 0; s < (p.shared ? opt.samples : std::size_t{1}); ++s) {
        if (up.shared && p.shared && s > 0) break;
        if (p.shared) {
          edges.push_back({instance_id(up, s), instance_id(p, 0), 0.0});
        } else {
          for (std::size_t t = 0; t < opt.samples; ++t)
            edges.push_back({instance_id(up, up.shared ? 0 : t), instance_id(p, t), 0.0});
        }
      }
    }
  }

  WorkflowFixture fx;
  fx.traces.metric_names = metric_names();
  std::vector<TaskDescriptor> tasks;
  for (const auto& inst : instances) {
    const auto& p = *inst.process;
    TaskDescriptor t;
    t.id = inst.id;
    t.requests[kCpus] = p.cpus;
    t.requests[kMemory] = p.memory_gib * kGiB;
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<double> metric_sum(metric_names().size(), 0.0);
    for (const auto& node : catalog.nodes()) {
      const auto hw = hardware_of_type(node.machine_type);
      const double noise = std::max(0.5, 1.0 + opt.runtime_noise * unit(rng));
      const double truth = ideal_runtime(inst.base, p, hw) * noise;
      fx.runtimes.set(t.id, node.machine_type, truth);
      for (std::size_t r = 0; r < opt.runs_per_type; ++r) {
        TaskTraceRecord rec;
        rec.task_id = t.id;
        rec.machine_type = node.machine_type;
        rec.runtime = truth * std::max(0.5, 1.0 + opt.trace_noise * unit(rng));
        auto wobble = [&] { return std::max(0.1, 1.0 + opt.trace_noise * unit(rng)); };
        const double scale = inst.base / p.base_runtime;
        const double peak = p.memory_gib * kGiB * (0.45 + 0.45 * p.mem_w) * wobble();
        rec.metrics = {
            100.0 * p.cpus * (0.2 + 0.75 * p.cpu_w) * wobble(),
            p.io_w * scale * 8.0e9 * wobble(),
            p.io_w * scale * 3.0e9 * wobble(),
            peak,
            peak * 0.6 * wobble(),
        };
        for (std::size_t m = 0; m < rec.metrics.size(); ++m) metric_sum[m] += rec.metrics[m];
        sum += rec.runtime;
        ++count;
        fx.traces.records.push_back(std::move(rec));
      }
    }
    t.avg_historical_runtime = sum / static_cast<double>(count);
    for (auto& m : metric_sum) m /= static_cast<double>(count);
    t.trace_features = std::move(metric_sum);
    tasks.push_back(std::move(t));
  }
  fx.dag = WorkflowDag(shape.name, metric_names(), std::move(tasks), std::move(edges));
  return fx;
}

struct FixtureSet {
  Cluster catalog;
  std::vector<std::string> names;
  std::vector<WorkflowFixture> workflows;
  TraceSet traces;  // all workflows combined
};

inline FixtureSet make_fixture_set(const FixtureOptions& opt = {}) {
  FixtureSet set;
  set.catalog = catalog(opt.seed);
  set.traces.metric_names = metric_names();
  for (const auto& shape : workflow_shapes()) {
    auto wf = make_workflow(shape, set.catalog, opt);
    set.traces.records.insert(set.traces.records.end(), wf.traces.records.begin(), wf.traces.records.end());
    set.names.push_back(shape.name);
    set.workflows.push_back(std::move(wf));
  }
  return set;
}

/// In-memory plan over the fixture set with the default sweep settings.
inline ExperimentPlan make_plan(const FixtureSet& set) {
  ExperimentPlan plan;
  plan.catalog = set.catalog;
  plan.traces = set.traces;
  for (std::size_t i = 0; i < set.workflows.size(); ++i)
    plan.workflows.push_back({set.names[i], set.workflows[i].dag, set.workflows[i].runtimes});
  return plan;
}

/// Writes catalog, traces, workflow documents, runtime matrices and a plan
/// file referencing them into `dir`.
inline void write_fixture_set(const FixtureSet& set, const std::filesystem::path& dir, const ExperimentPlan& defaults) {
  std::filesystem::create_directories(dir);
  {
    auto out = csv::open_output((dir / "catalog.csv").string());
    write_profiles(out, set.catalog);
  }
  {
    auto out = csv::open_output((dir / "traces.csv").string());
    write_traces(out, set.traces);
  }
  nlohmann::json workflows = nlohmann::json::array();
  for (std::size_t i = 0; i < set.workflows.size(); ++i) {
    const auto& name = set.names[i];
    write_json_file((dir / (name + ".json")).string(), workflow_to_json(set.workflows[i].dag));
    auto out = csv::open_output((dir / (name + "_runtimes.csv")).string());
    write_runtimes(out, set.workflows[i].runtimes);
    workflows.push_back({{"name", name}, {"dag", name + ".json"}, {"runtimes", name + "_runtimes.csv"}});
  }
  std::vector<std::string> dists;
  for (auto d : defaults.distributions) dists.emplace_back(to_string(d));
  nlohmann::json plan = {
      {"format", kPlanFormat},
      {"version", kPlanVersion},
      {"catalog", "catalog.csv"},
      {"traces", "traces.csv"},
      {"workflows", std::move(workflows)},
      {"cluster_count", defaults.cluster_count},
      {"nodes_per_cluster", defaults.nodes_per_cluster},
      {"strategies", defaults.strategies},
      {"distributions", dists},
      {"error_levels", defaults.error_levels},
      {"master_seed", defaults.master_seed},
      {"bandwidth_bytes_per_s", nullptr},
      {"runtime_scale", defaults.runtime_scale},
      {"model",
       {{"target", std::string(to_string(defaults.target))},
        {"max_depth", defaults.tree.max_depth},
        {"min_samples_leaf", defaults.tree.min_samples_leaf},
        {"min_variance_reduction", defaults.tree.min_variance_reduction}}},
  };
  write_json_file((dir / "plan.json").string(), plan);
}

}  // namespace reshi::fixtures
