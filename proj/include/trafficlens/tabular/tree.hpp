#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/random.hpp"

namespace trafficlens::tabular {

// A split sends feature < threshold to the left child.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double gain = 0.0;   // split gain (internal nodes)
  double cover = 0.0;  // weighted sample count reaching the node
  std::vector<double> value;  // leaf output

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const std::vector<double>& leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                                          : n.right);
    }
    return nodes[i].value;
  }

  int depth() const { return depth_from(0); }
  std::size_t split_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return !n.is_leaf(); }));
  }

  bool operator==(const DecisionTree&) const = default;

 private:
  int depth_from(std::size_t i) const {
    const auto& n = nodes[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)),
                        depth_from(static_cast<std::size_t>(n.right)));
  }
};

// Row order of every column, ascending by value (ties by row index).
// Computed once per training matrix and shared by all trees.
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> order;

  explicit SortedColumns(const Matrix& X) : order(X.cols()) {
    for (std::size_t f = 0; f < X.cols(); ++f) {
      auto& idx = order[f];
      idx.resize(X.rows());
      std::iota(idx.begin(), idx.end(), 0u);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
    }
  }
};

struct GrowParams {
  int max_depth = 4;
  double min_child_samples = 2.0;  // weighted count required in each child
};

// Second-order boosting criterion for one class column of grad/hess.
class NewtonCriterion {
 public:
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    double n = 0.0;
  };

  NewtonCriterion(std::span<const double> grad, std::span<const double> hess, double lambda,
                  double gamma)
      : grad_(grad), hess_(hess), lambda_(lambda), gamma_(gamma) {}

  Stats zero() const { return {}; }
  void add(Stats& s, std::size_t row, double w) const {
    s.g += w * grad_[row];
    s.h += w * hess_[row];
    s.n += w;
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.g - b.g, a.h - b.h, a.n - b.n}; }
  static double count(const Stats& s) { return s.n; }

  double score(const Stats& s) const {
    const double denom = s.h + lambda_;
    return denom > 0.0 ? s.g * s.g / denom : 0.0;
  }
  // 1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma
  double gain(const Stats& left, const Stats& right, const Stats& parent) const {
    return 0.5 * (score(left) + score(right) - score(parent)) - gamma_;
  }
  std::vector<double> leaf(const Stats& s) const {
    const double denom = s.h + lambda_;
    const double v = denom > 0.0 ? -s.g / denom : 0.0;
    return {v == 0.0 ? 0.0 : v};
  }

 private:
  std::span<const double> grad_;
  std::span<const double> hess_;
  double lambda_;
  double gamma_;
};

inline constexpr std::size_t kMaxClasses = 8;

// Gini impurity decrease, weighted by sample counts. Leaves hold class
// frequency vectors.
class GiniCriterion {
 public:
  struct Stats {
    std::array<double, kMaxClasses> counts{};
    double n = 0.0;
  };

  GiniCriterion(std::span<const int> labels, int num_classes)
      : labels_(labels), num_classes_(num_classes) {
    require(num_classes >= 1 && static_cast<std::size_t>(num_classes) <= kMaxClasses,
            ErrorKind::kConfig, "unsupported class count");
  }

  Stats zero() const { return {}; }
  void add(Stats& s, std::size_t row, double w) const {
    s.counts[static_cast<std::size_t>(labels_[row])] += w;
    s.n += w;
  }
  static Stats minus(const Stats& a, const Stats& b) {
    Stats out;
    for (std::size_t k = 0; k < kMaxClasses; ++k) out.counts[k] = a.counts[k] - b.counts[k];
    out.n = a.n - b.n;
    return out;
  }
  static double count(const Stats& s) { return s.n; }

  // n * (1 - gini) = sum c_k^2 / n
  double purity(const Stats& s) const {
    if (s.n <= 0.0) return 0.0;
    double acc = 0.0;
    for (int k = 0; k < num_classes_; ++k) acc += s.counts[static_cast<std::size_t>(k)] * s.counts[static_cast<std::size_t>(k)];
    return acc / s.n;
  }
  double gain(const Stats& left, const Stats& right, const Stats& parent) const {
    return purity(left) + purity(right) - purity(parent);
  }
  std::vector<double> leaf(const Stats& s) const {
    std::vector<double> v(static_cast<std::size_t>(num_classes_), 0.0);
    for (int k = 0; k < num_classes_; ++k) v[static_cast<std::size_t>(k)] = s.counts[static_cast<std::size_t>(k)] / s.n;
    return v;
  }

 private:
  std::span<const int> labels_;
  int num_classes_;
};

// Picks the candidate features for each node; empty means all features.
class FeatureSampler {
 public:
  FeatureSampler() = default;
  FeatureSampler(std::size_t per_node, std::uint64_t seed) : per_node_(per_node), rng_(seed) {}

  bool active() const noexcept { return per_node_ > 0; }

  std::vector<char> draw(std::size_t num_features) {
    std::vector<char> mask(num_features, per_node_ == 0 ? 1 : 0);
    if (per_node_ == 0 || per_node_ >= num_features) {
      std::fill(mask.begin(), mask.end(), 1);
      return mask;
    }
    std::vector<std::size_t> idx(num_features);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = 0; i < per_node_; ++i) {
      std::swap(idx[i], idx[i + rng_.index(num_features - i)]);
      mask[idx[i]] = 1;
    }
    return mask;
  }

 private:
  std::size_t per_node_ = 0;
  Rng rng_{0};
};

// Exact greedy CART growth, level by level.
//
// Every candidate threshold is the midpoint between adjacent distinct
// values among the node's samples. A split is kept only when its gain is
// strictly positive and both children hold at least min_child_samples
// (weighted). Ties resolve to the lowest feature index, then the lowest
// threshold. Rows with zero weight are ignored; per-feature gains are
// accumulated into feature_gain when given.
template <typename Criterion>
DecisionTree grow_tree(const Matrix& X, const SortedColumns& sorted,
                       std::span<const double> weights, const Criterion& crit,
                       const GrowParams& params, FeatureSampler* sampler = nullptr,
                       std::vector<double>* feature_gain = nullptr) {
  using Stats = typename Criterion::Stats;
  const std::size_t n = X.rows();
  const std::size_t num_features = X.cols();
  require(n > 0, ErrorKind::kShape, "cannot grow a tree on zero rows");
  require(weights.size() == n, ErrorKind::kShape, "weight vector does not match row count");

  DecisionTree tree;
  std::vector<Stats> stats;
  std::vector<int> node_of(n, -1);

  Stats root = crit.zero();
  for (std::size_t r = 0; r < n; ++r) {
    if (weights[r] > 0.0) {
      node_of[r] = 0;
      crit.add(root, r, weights[r]);
    }
  }
  require(Criterion::count(root) > 0.0, ErrorKind::kShape, "cannot grow a tree on zero weight");
  tree.nodes.push_back(TreeNode{});
  tree.nodes[0].cover = Criterion::count(root);
  stats.push_back(root);

  struct Best {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  struct Scan {
    Stats left;
    double prev = 0.0;
    bool has_prev = false;
  };

  std::vector<int> frontier = {0};
  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    const std::size_t node_count = tree.nodes.size();
    std::vector<char> on_frontier(node_count, 0);
    std::vector<std::vector<char>> masks(node_count);
    std::vector<char> any_uses(num_features, 0);
    for (int id : frontier) {
      const auto nid = static_cast<std::size_t>(id);
      if (Criterion::count(stats[nid]) < 2.0 * params.min_child_samples) continue;
      on_frontier[nid] = 1;
      masks[nid] = sampler && sampler->active() ? sampler->draw(num_features)
                                                : std::vector<char>(num_features, 1);
      for (std::size_t f = 0; f < num_features; ++f) any_uses[f] |= masks[nid][f];
    }

    std::vector<Best> best(node_count);
    std::vector<Scan> scan(node_count);
    for (std::size_t f = 0; f < num_features; ++f) {
      if (!any_uses[f]) continue;
      for (int id : frontier) {
        scan[static_cast<std::size_t>(id)] = Scan{crit.zero(), 0.0, false};
      }
      for (std::uint32_t row : sorted.order[f]) {
        const int id = node_of[row];
        if (id < 0) continue;
        const auto nid = static_cast<std::size_t>(id);
        if (!on_frontier[nid] || !masks[nid][f]) continue;
        const double v = X(row, f);
        Scan& s = scan[nid];
        if (s.has_prev && v > s.prev) {
          const Stats& parent = stats[nid];
          const Stats right = Criterion::minus(parent, s.left);
          if (Criterion::count(s.left) >= params.min_child_samples &&
              Criterion::count(right) >= params.min_child_samples) {
            const double g = crit.gain(s.left, right, parent);
            if (g > best[nid].gain) {
              double mid = 0.5 * (s.prev + v);
              if (!(mid > s.prev)) mid = v;
              best[nid] = Best{g, static_cast<int>(f), mid};
            }
          }
        }
        crit.add(s.left, row, weights[row]);
        s.prev = v;
        s.has_prev = true;
      }
    }

    std::vector<int> next;
    std::vector<int> left_of(node_count, -1);
    for (int id : frontier) {
      const auto nid = static_cast<std::size_t>(id);
      if (best[nid].feature < 0) continue;
      auto& node = tree.nodes[nid];
      node.feature = best[nid].feature;
      node.threshold = best[nid].threshold;
      node.gain = best[nid].gain;
      if (feature_gain) (*feature_gain)[static_cast<std::size_t>(node.feature)] += node.gain;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes[nid].left = l;
      tree.nodes[nid].right = l + 1;
      tree.nodes.push_back(TreeNode{});
      tree.nodes.push_back(TreeNode{});
      stats.push_back(crit.zero());
      stats.push_back(crit.zero());
      left_of[nid] = l;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;
    for (std::size_t r = 0; r < n; ++r) {
      const int id = node_of[r];
      if (id < 0 || static_cast<std::size_t>(id) >= node_count) continue;
      const int l = left_of[static_cast<std::size_t>(id)];
      if (l < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(id)];
      const int child = X(r, static_cast<std::size_t>(node.feature)) < node.threshold ? l : l + 1;
      node_of[r] = child;
      crit.add(stats[static_cast<std::size_t>(child)], r, weights[r]);
    }
    for (int id : next) {
      tree.nodes[static_cast<std::size_t>(id)].cover = Criterion::count(stats[static_cast<std::size_t>(id)]);
    }
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].is_leaf()) tree.nodes[i].value = crit.leaf(stats[i]);
  }
  return tree;
}

struct TreeParams {
  int max_depth = 4;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_samples = 2.0;
};

// One boosting tree for class column k of the gradient/hessian matrices.
inline DecisionTree build_tree(const Matrix& X, const Matrix& grad, const Matrix& hess,
                               std::size_t k, const TreeParams& params) {
  require(X.rows() > 0, ErrorKind::kShape, "build_tree needs at least one row");
  require(grad.rows() == X.rows() && hess.rows() == X.rows(), ErrorKind::kShape,
          "gradient rows do not match the feature matrix");
  require(k < grad.cols() && k < hess.cols(), ErrorKind::kShape, "class index out of range");
  std::vector<double> g(X.rows()), h(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    g[r] = grad(r, k);
    h[r] = hess(r, k);
    require(std::isfinite(g[r]) && std::isfinite(h[r]) && h[r] >= 0.0, ErrorKind::kValue,
            "gradients must be finite and hessians non-negative");
  }
  const SortedColumns sorted(X);
  const std::vector<double> ones(X.rows(), 1.0);
  return grow_tree(X, sorted, ones, NewtonCriterion(g, h, params.lambda, params.gamma),
                   GrowParams{params.max_depth, params.min_child_samples});
}

}  // namespace trafficlens::tabular
