#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "reshi/reshi.hpp"

namespace {

using namespace reshi;

void emit_json(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out_path, j);
  }
}

int train_cmd(const std::string& traces_path, const std::string& profiles_path, const std::string& out_path,
              const std::string& target, std::size_t max_depth, std::size_t min_leaf, std::uint64_t seed) {
  TreeParams params;
  params.max_depth = max_depth;
  params.min_samples_leaf = min_leaf;
  const auto traces = load_traces(traces_path);
  const auto profiles = load_profiles(profiles_path);
  const auto model = RecommenderModel::train(traces, profiles, parse_target_mode(target), params, seed);
  write_json_file(out_path, model.to_json());
  std::cout << nlohmann::json{{"model", out_path},
                              {"training_rows", model.training_rows()},
                              {"tree_depth", model.tree().depth()},
                              {"leaves", model.tree().leaf_count()}}
                   .dump()
            << '\n';
  return 0;
}

int rank_cmd(const std::string& model_path, const std::string& task_id, const std::string& profiles_path,
             const std::string& dag_path) {
  const auto model = RecommenderModel::from_json(read_json_file(model_path));
  const auto profiled = model.profile(load_profiles(profiles_path));
  TaskDescriptor task;
  if (!dag_path.empty()) {
    const auto dag = load_workflow(dag_path);
    model.check_metrics(dag.metric_names());
    task = dag.task(dag.index_of(task_id));
  } else {
    auto it = model.tasks().find(task_id);
    if (it == model.tasks().end())
      fail(ErrorCode::UnknownTask, "task '" + task_id + "' is not in the model's trace catalog; pass --dag");
    task = it->second;
  }
  const auto list = model.rank(task, profiled);
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : list.entries) entries.push_back({{"node_id", e.node_id}, {"score", e.score}});
  std::cout << nlohmann::json{{"task_id", task.id}, {"priority_list", std::move(entries)}}.dump(2) << '\n';
  return 0;
}

struct SimulateArgs {
  std::string dag, cluster, runtimes, strategy, dist = "none", model, out;
  double err = 0.0, bandwidth = kUnlimitedBandwidth, runtime_scale = 1.0;
  std::uint64_t seed = 0;
};

int simulate_cmd(const SimulateArgs& a) {
  const auto dag = load_workflow(a.dag);
  const auto cluster = load_profiles(a.cluster);
  const auto matrix = load_runtimes(a.runtimes).scaled(a.runtime_scale);
  std::shared_ptr<const RecommenderModel> model;
  if (is_reshi(a.strategy)) {
    if (a.model.empty()) fail(ErrorCode::InvalidArgument, "strategy '" + a.strategy + "' needs --model");
    model = std::make_shared<const RecommenderModel>(RecommenderModel::from_json(read_json_file(a.model)));
  }
  auto strategy = make_strategy(a.strategy, model);
  const PredictionErrorModel em{parse_distribution(a.dist), a.err, a.seed};
  const auto result = simulate(dag, cluster, *strategy, matrix, em, {a.bandwidth});
  emit_json(to_json(result), a.out);
  return 0;
}

int experiment_cmd(const std::string& plan_path, const std::string& out_dir, unsigned jobs) {
  const auto plan = load_plan(plan_path);
  const auto results = run_experiment(plan, out_dir, jobs);
  std::cout << nlohmann::json{{"out", out_dir}, {"runs", results.runs.size()}, {"failures", results.failures.size()}}.dump()
            << '\n';
  return results.runs.empty() ? 1 : 0;
}

int report_cmd(const std::string& in_dir, const std::string& format) {
  const auto fmt = parse_report_format(format);
  const auto path = (std::filesystem::path(in_dir) / ExperimentFiles::raw).string();
  auto in = csv::open_input(path);
  const auto report = aggregate(parse_raw_results(in, path));
  write_report(std::cout, report, fmt);
  return 0;
}

int fixtures_cmd(const std::string& out_dir, std::size_t samples, std::uint64_t seed, std::size_t clusters) {
  fixtures::FixtureOptions opt;
  opt.samples = samples;
  opt.seed = seed;
  const auto set = fixtures::make_fixture_set(opt);
  auto plan = fixtures::make_plan(set);
  plan.cluster_count = clusters;
  fixtures::write_fixture_set(set, out_dir, plan);
  std::cout << nlohmann::json{{"out", out_dir}, {"machine_types", set.catalog.size()}, {"trace_rows", set.traces.records.size()}}
                   .dump()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reshi - workflow task placement recommender and scheduling simulator"};
  app.require_subcommand(1);

  std::string traces, profiles, out, target = "normalized";
  std::size_t max_depth = TreeParams{}.max_depth, min_leaf = TreeParams{}.min_samples_leaf;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "fit the recommender on task traces and node profiles");
  train->add_option("--traces", traces, "task trace CSV")->required();
  train->add_option("--profiles", profiles, "node profile CSV")->required();
  train->add_option("--out", out, "model JSON to write")->required();
  train->add_option("--target", target, "normalized|raw")->check(CLI::IsMember({"normalized", "raw"}));
  train->add_option("--max-depth", max_depth, "tree depth limit");
  train->add_option("--min-samples-leaf", min_leaf, "minimum rows per leaf");
  train->add_option("--seed", train_seed, "training seed");

  std::string model_path, task_id, dag_path;
  auto* rank = app.add_subcommand("rank", "print the node priority list for one task");
  rank->add_option("--model", model_path, "model JSON")->required();
  rank->add_option("--task-id", task_id, "task id")->required();
  rank->add_option("--profiles", profiles, "profiles of the nodes to rank")->required();
  rank->add_option("--dag", dag_path, "workflow document holding the task (defaults to the model's trace catalog)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run one workflow on one cluster with one strategy");
  simulate->add_option("--dag", sim.dag, "workflow document")->required();
  simulate->add_option("--cluster", sim.cluster, "node profile CSV of the cluster")->required();
  simulate->add_option("--runtimes", sim.runtimes, "runtime matrix CSV")->required();
  simulate->add_option("--strategy", sim.strategy, "rr|minmin|heft|reshi-c|reshi-m")
      ->required()
      ->check(CLI::IsMember(strategy_names()));
  simulate->add_option("--err", sim.err, "mean relative prediction error");
  simulate->add_option("--dist", sim.dist, "none|normal|exponential")
      ->check(CLI::IsMember({"none", "normal", "exponential"}));
  simulate->add_option("--seed", sim.seed, "error stream seed");
  simulate->add_option("--model", sim.model, "model JSON (reshi strategies)");
  simulate->add_option("--bandwidth", sim.bandwidth, "bytes/s between nodes (default: unlimited)");
  simulate->add_option("--runtime-scale", sim.runtime_scale, "uniform factor applied to the runtime matrix");
  simulate->add_option("--out", sim.out, "result JSON (default: stdout)");

  std::string plan_path;
  unsigned jobs = 1;
  auto* experiment = app.add_subcommand("experiment", "run a full sweep and write report files");
  experiment->add_option("--plan", plan_path, "plan JSON")->required();
  experiment->add_option("--out", out, "output directory")->required();
  experiment->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string in_dir, format = "csv";
  auto* report = app.add_subcommand("report", "aggregate raw sweep results");
  report->add_option("--in", in_dir, "experiment output directory")->required();
  report->add_option("--format", format, "csv|md")->check(CLI::IsMember({"csv", "md"}));

  std::size_t samples = fixtures::FixtureOptions{}.samples, clusters = ExperimentPlan{}.cluster_count;
  std::uint64_t fixture_seed = fixtures::FixtureOptions{}.seed;
  auto* fixture = app.add_subcommand("fixtures", "write the synthetic catalog, workflows, traces and plan");
  fixture->add_option("--out", out, "output directory")->required();
  fixture->add_option("--samples", samples, "per-sample chains per workflow")->check(CLI::PositiveNumber);
  fixture->add_option("--seed", fixture_seed, "generator seed");
  fixture->add_option("--clusters", clusters, "cluster_count written to the plan")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return train_cmd(traces, profiles, out, target, max_depth, min_leaf, train_seed);
    if (*rank) return rank_cmd(model_path, task_id, profiles, dag_path);
    if (*simulate) return simulate_cmd(sim);
    if (*experiment) return experiment_cmd(plan_path, out, jobs);
    if (*report) return report_cmd(in_dir, format);
    if (*fixture) return fixtures_cmd(out, samples, fixture_seed, clusters);
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
  return 1;
}
