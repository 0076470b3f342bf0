#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/tabular/gbdt.hpp"
#include "trafficlens/tabular/tree.hpp"

namespace trafficlens::tabular {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 10;
  double min_child_samples = 1.0;
  std::uint64_t seed = 42;
  bool bootstrap = true;
  int max_features = 0;  // per split; 0 means round(sqrt(D))

  bool operator==(const ForestParams&) const = default;
};

struct RfModel {
  int num_classes = 0;
  std::size_t num_features = 0;
  ForestParams params;
  std::vector<DecisionTree> trees;
  std::vector<double> feature_gain;

  bool operator==(const RfModel&) const = default;
};

inline void predict_row(const RfModel& m, std::span<const double> row, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& t : m.trees) {
    const auto& leaf = t.leaf_for(row);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += leaf[k];
  }
  double total = 0.0;
  for (double& v : out) {
    v /= static_cast<double>(m.trees.size());
    total += v;
  }
  for (double& v : out) v /= total;
}

inline Matrix predict_proba(const RfModel& m, const Matrix& X) {
  require(X.cols() == m.num_features, ErrorKind::kShape,
          "feature matrix has " + std::to_string(X.cols()) + " columns, model expects " +
              std::to_string(m.num_features));
  Matrix out(X.rows(), static_cast<std::size_t>(m.num_classes));
  for (std::size_t r = 0; r < X.rows(); ++r) predict_row(m, X.row(r), out.row(r));
  return out;
}

// Bagged Gini trees with per-split feature subsampling.
inline RfModel fit_random_forest(const Matrix& X, std::span<const int> labels,
                                 const ForestParams& params = {}, int num_classes = 3) {
  require(X.rows() > 0, ErrorKind::kShape, "cannot fit on zero rows");
  require(params.n_trees >= 1, ErrorKind::kConfig, "a forest needs at least one tree");
  require(params.max_depth >= 0, ErrorKind::kConfig, "max_depth must be non-negative");
  check_labels(labels, num_classes, X.rows());

  const std::size_t n = X.rows();
  const std::size_t D = X.cols();
  RfModel m;
  m.num_classes = num_classes;
  m.num_features = D;
  m.params = params;
  m.feature_gain.assign(D, 0.0);

  const std::size_t per_split =
      params.max_features > 0
          ? static_cast<std::size_t>(params.max_features)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(D)))));
  const SortedColumns sorted(X);
  const GiniCriterion crit(labels, num_classes);
  Rng rng(params.seed);
  std::vector<double> weights(n);
  for (int t = 0; t < params.n_trees; ++t) {
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) weights[rng.index(n)] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    FeatureSampler sampler(per_split >= D ? 0 : per_split, rng.next_u64());
    m.trees.push_back(grow_tree(X, sorted, weights, crit,
                                GrowParams{params.max_depth, params.min_child_samples}, &sampler,
                                &m.feature_gain));
  }
  return m;
}

}  // namespace trafficlens::tabular
