// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace reshi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const fixtures::FixtureSet& fixture_set() {
  static const fixtures::FixtureSet set = fixtures::make_fixture_set();
  return set;
}

std::shared_ptr<const RecommenderModel> fixture_model(const ExperimentPlan& plan) {
  static const auto model = std::make_shared<const RecommenderModel>(
      RecommenderModel::train(plan.traces, plan.catalog, plan.target, plan.tree, plan.master_seed));
  return model;
}

// 1. Reshi-C, Reshi-M and RR ignore the error layer entirely.
Outcome error_invariance() {
  auto plan = fixtures::make_plan(fixture_set());
  plan.workflows.resize(1);
  plan.cluster_count = 20;
  plan.strategies = {"rr", "reshi-c", "reshi-m"};
  plan.error_levels = {0.0, 0.15, 0.3, 0.5};
  const auto results = run_sweep(plan, 1, fixture_model(plan));
  if (!results.failures.empty()) return {false, std::to_string(results.failures.size()) + " runs failed"};
  std::map<std::pair<std::string, std::size_t>, std::set<double>> seen;
  for (const auto& r : results.runs) seen[{r.strategy, r.cluster}].insert(r.makespan);
  std::size_t varying = 0;
  for (const auto& [key, values] : seen) varying += values.size() != 1;
  return {varying == 0 && seen.size() == 60 && results.runs.size() == 480,
          std::to_string(results.runs.size()) + " runs on " + plan.workflows[0].name + ", " +
              std::to_string(varying) + " of " + std::to_string(seen.size()) +
              " (strategy, cluster) series vary across err x distribution"};
}

// 2. Prediction-driven baselines degrade as the exponential error grows.
Outcome baseline_degradation() {
  auto plan = fixtures::make_plan(fixture_set());
  plan.cluster_count = 50;
  plan.strategies = {"heft", "minmin"};
  plan.distributions = {ErrorDistribution::Exponential};
  plan.error_levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  const auto results = run_sweep(plan);
  if (!results.failures.empty()) return {false, std::to_string(results.failures.size()) + " runs failed"};
  const auto report = aggregate(results.runs);
  std::map<std::pair<std::string, std::string>, std::vector<double>> curves;  // ascending err
  for (const auto& r : report.rows) curves[{r.workflow, r.strategy}].push_back(r.mean);
  bool pass = true;
  std::ostringstream d;
  for (const auto& [key, means] : curves) {
    double worst = 1e300;
    for (std::size_t i = 1; i < means.size(); ++i) worst = std::min(worst, means[i] / means[i - 1]);
    pass &= worst >= 0.98;
    d << key.first << '/' << key.second << " mean " << fmt("%.0f", means.front()) << "->" << fmt("%.0f", means.back())
      << " s (min step ratio " << fmt("%.4f", worst) << "); ";
  }
  return {pass, d.str()};
}

// 3. Relative-% arithmetic on a constructed five-strategy cell.
Outcome relative_arithmetic() {
  const std::vector<std::pair<std::string, double>> means{
      {"heft", 1055.8}, {"reshi-c", 1000.0}, {"reshi-m", 1143.2}, {"minmin", 1087.1}, {"rr", 1694.1}};
  const std::map<std::string, double> expected{
      {"heft", 5.58}, {"reshi-c", 0.00}, {"reshi-m", 14.32}, {"minmin", 8.71}, {"rr", 69.41}};
  std::vector<RunResult> runs;
  for (const auto& [s, m] : means) runs.push_back({"chipseq", 0, s, ErrorDistribution::Normal, 0.15, m, true, ""});
  const auto report = aggregate(runs);
  bool pass = report.rows.size() == 5;
  std::ostringstream d;
  for (const auto& r : report.rows) {
    pass &= std::abs(r.mean_pct - expected.at(r.strategy)) <= 0.01;
    d << r.strategy << '=' << fmt("%.4f", r.mean_pct) << ' ';
  }
  return {pass, d.str()};
}

// E|X| for X ~ N(1, 0.5), by composite Simpson over [1 - 12 sd, 1 + 12 sd].
double abs_normal_mean_by_integration() {
  const double mu = 1.0, sd = 0.5, lo = mu - 12 * sd, hi = mu + 12 * sd;
  const int n = 200000;
  const double h = (hi - lo) / n;
  auto f = [&](double x) {
    const double z = (x - mu) / sd;
    return std::abs(x) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * M_PI));
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4 : 2);
  return acc * h / 3;
}

// 4. Monte-Carlo mean relative error against the analytic expectations.
Outcome error_statistics() {
  const double err = 0.15;
  const double e_abs_normal = abs_normal_mean_by_integration();
  bool pass = true;
  std::ostringstream d;
  for (auto [dist, expect] : {std::pair{ErrorDistribution::Exponential, err * 1.0},
                              std::pair{ErrorDistribution::Normal, err * e_abs_normal}}) {
    const PredictionErrorModel model{dist, err, 2024};
    Rng rng(model.seed);
    double acc = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) acc += std::abs(inject_error(100.0, model, rng) - 100.0) / 100.0;
    const double mean = acc / n;
    const double rel = std::abs(mean / expect - 1.0);
    pass &= rel <= 0.015;
    d << to_string(dist) << ": " << fmt("%.5f", mean) << " vs " << fmt("%.5f", expect) << " ("
      << fmt("%.2f", rel * 100) << "% off); ";
  }
  d << "E|N(1,0.5)|=" << fmt("%.5f", e_abs_normal);
  return {pass, d.str()};
}

// Brute-force replay of a HEFT processing order with integer-second runtimes:
// every task takes the node with the earliest finish, found by trying every
// integer start time and checking capacity second by second.
struct ReplayResult {
  std::vector<std::size_t> node;
  long makespan = 0;
};

ReplayResult brute_force_replay(const WorkflowDag& dag, const Cluster& cluster, const std::vector<long>& runtime_of,
                                const std::vector<std::size_t>& order) {
  const std::size_t nodes = cluster.size();
  long horizon = 1;
  for (long r : runtime_of) horizon += r;
  // usage[n][second] = cpus in use
  std::vector<std::vector<double>> cpu(nodes, std::vector<double>(2 * horizon, 0.0)), mem = cpu;
  std::vector<long> finish(dag.size(), -1);
  ReplayResult out;
  out.node.assign(dag.size(), 0);
  for (auto t : order) {
    long ready = 0;
    for (auto p : dag.predecessors(t)) ready = std::max(ready, finish[p]);
    const double rc = amount(dag.task(t).requests, kCpus), rm = amount(dag.task(t).requests, kMemory);
    long best_finish = -1;
    std::size_t best_node = 0;
    for (std::size_t n = 0; n < nodes; ++n) {
      const double cc = amount(cluster.node(n).capacities, kCpus), cm = amount(cluster.node(n).capacities, kMemory);
      if (rc > cc || rm > cm) continue;
      const long d = runtime_of[t * nodes + n];
      for (long s = ready; s < horizon; ++s) {
        bool ok = true;
        for (long u = s; u < s + d && ok; ++u) ok = cpu[n][u] + rc <= cc && mem[n][u] + rm <= cm;
        if (ok) {
          if (best_finish < 0 || s + d < best_finish) best_finish = s + d, best_node = n;
          break;
        }
      }
    }
    const long d = runtime_of[t * nodes + best_node];
    for (long u = best_finish - d; u < best_finish; ++u) cpu[best_node][u] += rc, mem[best_node][u] += rm;
    finish[t] = best_finish;
    out.node[t] = best_node;
    out.makespan = std::max(out.makespan, best_finish);
  }
  return out;
}

// 5. HEFT against the brute-force replay, plus the documented chain example.
Outcome heft_oracle() {
  std::mt19937_64 rng(2025);
  int matches = 0, valid = 0, order_ok = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    auto dag = test::random_dag(rng, 1 + rng() % 5, 0.4, 2);
    std::vector<NodeProfile> nodes;
    const std::size_t n_nodes = 1 + rng() % 3;
    for (std::size_t n = 0; n < n_nodes; ++n)
      nodes.push_back(test::node("n" + std::to_string(n), "type" + std::to_string(n), 2 + rng() % 3, 8));
    const auto cluster = test::cluster(nodes);
    std::vector<long> runtime(dag.size() * n_nodes);
    PredictionTable p(dag.size(), n_nodes);
    RuntimeMatrix matrix;
    for (std::size_t t = 0; t < dag.size(); ++t)
      for (std::size_t n = 0; n < n_nodes; ++n) {
        runtime[t * n_nodes + n] = 1 + static_cast<long>(rng() % 20);
        p.set(t, n, static_cast<double>(runtime[t * n_nodes + n]));
        matrix.set(dag.task(t).id, cluster.node(n).machine_type, p.at(t, n));
      }
    const auto plan = heft(dag, cluster, p);

    std::vector<std::size_t> pos(dag.size());
    for (std::size_t i = 0; i < plan.order.size(); ++i) pos[plan.order[i]] = i;
    bool topo = plan.order.size() == dag.size();
    for (std::size_t t = 0; t < dag.size(); ++t)
      for (auto c : dag.successors(t)) topo &= pos[t] < pos[c];
    order_ok += topo;

    const auto replay = brute_force_replay(dag, cluster, runtime, plan.order);
    bool same = plan.makespan == to_micros(static_cast<double>(replay.makespan));
    for (std::size_t t = 0; t < dag.size(); ++t) same &= plan.tasks[t].node == replay.node[t];
    matches += same;

    Heft strategy;
    const auto result = simulate(dag, cluster, strategy, matrix, {});
    valid += audit(result, dag, cluster).empty();
  }

  auto chain = test::dag({test::task("A"), test::task("B")}, {{"A", "B", 0}});
  auto two = test::cluster({test::node("n1", "x", 4, 8), test::node("n2", "y", 4, 8)});
  PredictionTable cp(2, 2);
  cp.set(0, 0, 10);
  cp.set(0, 1, 20);
  cp.set(1, 0, 30);
  cp.set(1, 1, 15);
  const auto cplan = heft(chain, two, cp);
  const bool chain_ok = cplan.tasks[0].node == 0 && cplan.tasks[1].node == 1 && cplan.makespan == to_micros(25.0) &&
                        cplan.upward_rank[0] == 37.5 && cplan.upward_rank[1] == 22.5;

  return {matches == trials && valid == trials && order_ok == trials && chain_ok,
          "replay matches " + std::to_string(matches) + "/" + std::to_string(trials) + ", valid schedules " +
              std::to_string(valid) + "/" + std::to_string(trials) + ", topological order " +
              std::to_string(order_ok) + "/" + std::to_string(trials) + ", chain example " +
              (chain_ok ? "A->n1 B->n2 makespan 25" : "WRONG")};
}

// 6. Noiseless separable data: exact fit and ranking by the determining feature.
Outcome tree_purity() {
  std::mt19937_64 rng(606);
  int pure = 0, ordered = 0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t w = 2 + rng() % 4, n_nodes = 3 + rng() % 8, feature = rng() % w;
    std::vector<BenchmarkColumn> cols;
    for (std::size_t k = 0; k < w; ++k)
      cols.push_back({"b" + std::to_string(k), rng() % 2 ? Orientation::HigherIsBetter : Orientation::LowerIsBetter});
    std::vector<NodeProfile> nodes;
    std::vector<double> scores(n_nodes);
    std::iota(scores.begin(), scores.end(), 1.0);
    std::shuffle(scores.begin(), scores.end(), rng);
    std::uniform_real_distribution<double> any(0.0, 100.0);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      std::vector<double> s(w);
      for (std::size_t k = 0; k < w; ++k) s[k] = k == feature ? scores[n] * 7.5 : std::round(any(rng));
      nodes.push_back(test::node("node" + std::to_string(n), "type" + std::to_string(n), 8, 64, s));
    }
    const auto catalog = test::cluster(nodes, cols);
    const auto profiled = rank_features(catalog);

    // target: strictly increasing in the determining rank, 2 samples per value
    const double slope = 1.0 + any(rng), offset = any(rng);
    TraceSet traces;
    traces.metric_names = {"m0", "m1"};
    for (const auto& n : profiled.nodes())
      for (int run = 0; run < 2; ++run)
        traces.records.push_back({"task", n.machine_type, offset + slope * n.benchmark_ranks[feature], {3.0, 4.0}});
    TreeParams params;
    params.min_samples_leaf = 1;
    const auto model = RecommenderModel::train(traces, catalog, TargetMode::Raw, params);
    const auto set = build_training_set(traces, profiled, model.tasks(), TargetMode::Raw);
    pure += training_mse(model.tree(), set.features, set.targets) == 0.0;

    const auto list = model.rank(test::task("task", 1, 1, {3.0, 4.0}), model.profile(catalog));
    std::vector<std::pair<double, std::string>> want;
    for (const auto& n : profiled.nodes()) want.push_back({n.benchmark_ranks[feature], n.id});
    std::sort(want.begin(), want.end());
    bool same = list.entries.size() == want.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) same = list.entries[i].node_id == want[i].second;
    ordered += same;
  }
  return {pure == trials && ordered == trials, "MSE = 0 in " + std::to_string(pure) + "/" + std::to_string(trials) +
                                                   ", ordering by determining rank in " + std::to_string(ordered) +
                                                   "/" + std::to_string(trials)};
}

// 7. Desk-scale end-to-end ordering at 15% error.
Outcome end_to_end() {
  auto plan = fixtures::make_plan(fixture_set());
  plan.cluster_count = 100;
  plan.strategies = {"heft", "reshi-c", "reshi-m"};
  plan.error_levels = {0.15};
  const auto results = run_sweep(plan, 1, fixture_model(plan));
  if (!results.failures.empty()) return {false, std::to_string(results.failures.size()) + " runs failed"};
  const auto report = aggregate(results.runs);
  std::map<std::pair<std::string, std::string>, std::map<std::string, ReportRow>> cells;
  for (const auto& r : report.rows) cells[{r.workflow, r.distribution}][r.strategy] = r;
  bool pass = true;
  std::ostringstream d;
  for (const auto& [cell, rows] : cells) {
    const auto& heft = rows.at("heft");
    const auto& best = rows.at("reshi-c").mean <= rows.at("reshi-m").mean ? rows.at("reshi-c") : rows.at("reshi-m");
    const bool mean_ok = best.mean <= heft.mean, tail_ok = best.p95 <= heft.p90;
    pass &= mean_ok && tail_ok;
    d << "\n    " << cell.first << '/' << cell.second << ": " << best.strategy << " mean " << fmt("%.1f", best.mean)
      << (mean_ok ? " <= " : " > ") << "heft " << fmt("%.1f", heft.mean) << ", p95 " << fmt("%.1f", best.p95)
      << (tail_ok ? " <= " : " > ") << "heft p90 " << fmt("%.1f", heft.p90) << (mean_ok && tail_ok ? " ok" : " FAIL");
  }
  return {pass, d.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8. Two experiment runs with the same plan give byte-identical report files.
Outcome determinism() {
  auto plan = fixtures::make_plan(fixture_set());
  plan.cluster_count = 10;
  plan.error_levels = {0.0, 0.15, 0.3};
  const auto base = std::filesystem::temp_directory_path() / "reshi_acceptance_determinism";
  std::filesystem::remove_all(base);
  run_experiment(plan, base / "a", 1);
  run_experiment(plan, base / "b", 2);
  bool pass = true;
  std::ostringstream d;
  for (const char* f : {ExperimentFiles::raw, ExperimentFiles::failures, ExperimentFiles::report_csv,
                        ExperimentFiles::report_md, ExperimentFiles::series}) {
    const auto a = slurp(base / "a" / f), b = slurp(base / "b" / f);
    const bool same = !a.empty() && a == b;
    pass &= same;
    d << f << (same ? " identical" : " DIFFERS") << " (" << a.size() << " B); ";
  }
  std::filesystem::remove_all(base);
  return {pass, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"error invariance of reshi-c, reshi-m and rr", error_invariance},
      {"heft/minmin mean makespan nondecreasing in exponential err", baseline_degradation},
      {"relative-change arithmetic on constructed means", relative_arithmetic},
      {"error-model statistics over 1e6 samples", error_statistics},
      {"heft plan equals brute-force replay, schedules valid", heft_oracle},
      {"regression-tree purity on separable data", tree_purity},
      {"best reshi variant vs heft at err 0.15 over 100 clusters", end_to_end},
      {"byte-identical reports across experiment runs", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
              << o.detail << " [" << fmt("%.1f", secs) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
