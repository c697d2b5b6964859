#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "reshi/error.hpp"
#include "reshi/profiling.hpp"

namespace reshi {

struct TreeParams {
  int max_depth = 8;
  std::size_t min_samples_leaf = 3;
  double min_variance_reduction = 1e-7;

  void validate() const {
    if (max_depth < 1) fail(ErrorCode::InvalidArgument, "max_depth must be >= 1");
    if (min_samples_leaf < 1) fail(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
    if (!(min_variance_reduction >= 0.0)) fail(ErrorCode::InvalidArgument, "min_variance_reduction must be >= 0");
  }
};

/// CART regression tree. Rows go left when x[feature] <= threshold.
/// Leaves predict the arithmetic mean of their training targets.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
  };

  RegressionTree() = default;

  /// Greedy best-first-found split by squared-error reduction. Candidate
  /// thresholds are midpoints between consecutive distinct sorted values.
  /// Ties keep the lowest feature index, then the lowest threshold, so the
  /// result is a pure function of the inputs; `seed` is recorded only.
  static RegressionTree train(const DesignMatrix& x, std::span<const double> targets, const TreeParams& params,
                              std::uint64_t seed = 0) {
    params.validate();
    if (x.rows() == 0) fail(ErrorCode::EmptyTrainingSet, "no training rows");
    if (targets.size() != x.rows())
      fail(ErrorCode::DimensionMismatch, std::to_string(targets.size()) + " targets for " +
                                             std::to_string(x.rows()) + " rows");
    RegressionTree tree;
    tree.params_ = params;
    tree.seed_ = seed;
    tree.dims_ = x.cols();
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Builder b{x, targets, params, tree.nodes_};
    b.grow(rows, 0);
    return tree;
  }

  double predict(std::span<const double> features) const {
    if (features.size() != dims_)
      fail(ErrorCode::DimensionMismatch, "feature vector has length " + std::to_string(features.size()) +
                                             ", tree expects " + std::to_string(dims_));
    if (nodes_.empty()) fail(ErrorCode::InvalidArgument, "untrained tree");
    const Node* n = &nodes_[0];
    while (!n->is_leaf()) n = &nodes_[features[n->feature] <= n->threshold ? n->left : n->right];
    return n->value;
  }

  int depth() const { return nodes_.empty() ? 0 : depth_of(0); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
  }
  std::size_t dimensions() const noexcept { return dims_; }
  const TreeParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
      if (n.is_leaf())
        nodes.push_back({{"value", n.value}, {"samples", n.samples}});
      else
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                         {"value", n.value}, {"samples", n.samples}});
    }
    return {{"dimensions", dims_},
            {"seed", seed_},
            {"params",
             {{"max_depth", params_.max_depth},
              {"min_samples_leaf", params_.min_samples_leaf},
              {"min_variance_reduction", params_.min_variance_reduction}}},
            {"nodes", std::move(nodes)}};
  }

  static RegressionTree from_json(const nlohmann::json& j) {
    RegressionTree t;
    try {
      t.dims_ = j.at("dimensions").get<std::size_t>();
      t.seed_ = j.at("seed").get<std::uint64_t>();
      const auto& p = j.at("params");
      t.params_.max_depth = p.at("max_depth").get<int>();
      t.params_.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
      t.params_.min_variance_reduction = p.at("min_variance_reduction").get<double>();
      for (const auto& jn : j.at("nodes")) {
        Node n;
        n.value = jn.at("value").get<double>();
        n.samples = jn.at("samples").get<std::size_t>();
        if (jn.contains("feature")) {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        t.nodes_.push_back(n);
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, std::string("malformed tree: ") + e.what());
    }
    const auto count = static_cast<int>(t.nodes_.size());
    if (count == 0) fail(ErrorCode::ParseError, "tree has no nodes");
    for (int i = 0; i < count; ++i) {
      const auto& n = t.nodes_[i];
      if (n.is_leaf()) continue;
      if (n.feature >= static_cast<int>(t.dims_) || n.left <= i || n.right <= i || n.left >= count || n.right >= count)
        fail(ErrorCode::ParseError, "tree node " + std::to_string(i) + " has invalid links");
    }
    return t;
  }

 private:
  struct Builder {
    const DesignMatrix& x;
    std::span<const double> y;
    const TreeParams& params;
    std::vector<Node>& nodes;

    int grow(std::vector<std::size_t>& rows, int depth) {
      const int id = static_cast<int>(nodes.size());
      nodes.push_back(Node{});
      nodes[id].samples = rows.size();
      nodes[id].value = leaf_value(rows);

      if (depth >= params.max_depth || rows.size() < 2 * params.min_samples_leaf || pure(rows)) return id;
      auto split = best_split(rows);
      if (!split || split->gain / static_cast<double>(rows.size()) < params.min_variance_reduction) return id;

      std::vector<std::size_t> left, right;
      for (auto r : rows) (x.at(r, split->feature) <= split->threshold ? left : right).push_back(r);
      rows.clear();
      rows.shrink_to_fit();
      nodes[id].feature = static_cast<int>(split->feature);
      nodes[id].threshold = split->threshold;
      const int l = grow(left, depth + 1);
      const int r = grow(right, depth + 1);
      nodes[id].left = l;
      nodes[id].right = r;
      return id;
    }

    bool pure(const std::vector<std::size_t>& rows) const {
      return std::all_of(rows.begin(), rows.end(), [&](auto r) { return y[r] == y[rows.front()]; });
    }

    double leaf_value(const std::vector<std::size_t>& rows) const {
      if (pure(rows)) return y[rows.front()];
      double sum = 0.0;
      for (auto r : rows) sum += y[r];
      return sum / static_cast<double>(rows.size());
    }

    struct Split {
      std::size_t feature;
      double threshold;
      double gain;  // reduction of the sum of squared errors
    };

    std::optional<Split> best_split(const std::vector<std::size_t>& rows) const {
      const std::size_t n = rows.size();
      const std::size_t min_leaf = params.min_samples_leaf;
      double total = 0.0;
      for (auto r : rows) total += y[r];
      const double base = total * total / static_cast<double>(n);

      std::optional<Split> best;
      std::vector<std::size_t> sorted(rows);
      for (std::size_t f = 0; f < x.cols(); ++f) {
        std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return x.at(a, f) < x.at(b, f); });
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          left_sum += y[sorted[i]];
          const double lo = x.at(sorted[i], f);
          const double hi = x.at(sorted[i + 1], f);
          if (lo == hi) continue;
          const std::size_t nl = i + 1, nr = n - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          const double right_sum = total - left_sum;
          const double gain = left_sum * left_sum / static_cast<double>(nl) +
                              right_sum * right_sum / static_cast<double>(nr) - base;
          if (!best || gain > best->gain) {
            double mid = lo + (hi - lo) / 2.0;
            if (!(mid < hi)) mid = lo;
            best = Split{f, mid, gain};
          }
        }
      }
      if (best && !(best->gain > 0.0)) return std::nullopt;
      return best;
    }
  };

  int depth_of(int i) const {
    const auto& n = nodes_[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  }

  std::vector<Node> nodes_;
  TreeParams params_;
  std::uint64_t seed_ = 0;
  std::size_t dims_ = 0;
};

/// Mean squared error of the tree on a labelled set.
inline double training_mse(const RegressionTree& tree, const DesignMatrix& x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double d = tree.predict(x.row(r)) - y[r];
    acc += d * d;
  }
  return x.rows() ? acc / static_cast<double>(x.rows()) : 0.0;
}

}  // namespace reshi
