#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/numeric.hpp"
#include "trafficlens/tabular/tree.hpp"

namespace trafficlens::tabular {

struct GbdtParams {
  int rounds = 100;
  double eta = 0.1;
  int max_depth = 4;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_samples = 2.0;

  bool operator==(const GbdtParams&) const = default;
};

// Softmax gradient boosting: one tree per class per round.
struct GbdtModel {
  int num_classes = 0;
  std::size_t num_features = 0;
  GbdtParams params;
  std::vector<double> base_score;              // log class prior
  std::vector<std::vector<DecisionTree>> trees;  // [round][class]
  std::vector<double> feature_gain;            // per column
  std::vector<double> loss_history;            // training cross-entropy, round 0 = prior only

  bool operator==(const GbdtModel&) const = default;
};

inline void check_labels(std::span<const int> labels, int num_classes, std::size_t rows) {
  require(labels.size() == rows, ErrorKind::kShape, "label count does not match row count");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    require(y >= 0 && y < num_classes, ErrorKind::kLabel,
            "label " + std::to_string(y) + " outside 0.." + std::to_string(num_classes - 1));
    ++counts[static_cast<std::size_t>(y)];
  }
  const auto present = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  require(present >= 2, ErrorKind::kDegenerate, "training labels contain fewer than 2 classes");
}

inline void scores_row(const GbdtModel& m, std::span<const double> row, std::span<double> out) {
  for (int k = 0; k < m.num_classes; ++k) {
    double acc = 0.0;
    for (const auto& round : m.trees) acc += round[static_cast<std::size_t>(k)].leaf_for(row)[0];
    out[static_cast<std::size_t>(k)] = m.base_score[static_cast<std::size_t>(k)] + m.params.eta * acc;
  }
}

inline void predict_row(const GbdtModel& m, std::span<const double> row, std::span<double> out) {
  scores_row(m, row, out);
  softmax_inplace(out);
}

inline Matrix predict_proba(const GbdtModel& m, const Matrix& X) {
  require(X.cols() == m.num_features, ErrorKind::kShape,
          "feature matrix has " + std::to_string(X.cols()) + " columns, model expects " +
              std::to_string(m.num_features));
  Matrix out(X.rows(), static_cast<std::size_t>(m.num_classes));
  for (std::size_t r = 0; r < X.rows(); ++r) predict_row(m, X.row(r), out.row(r));
  return out;
}

namespace detail {
inline double cross_entropy(const Matrix& scores, std::span<const int> labels) {
  double loss = 0.0;
  std::vector<double> p(scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto s = scores.row(r);
    std::copy(s.begin(), s.end(), p.begin());
    softmax_inplace(p);
    loss -= std::log(std::max(p[static_cast<std::size_t>(labels[r])], 1e-300));
  }
  return loss / static_cast<double>(scores.rows());
}
}  // namespace detail

inline GbdtModel fit_gbdt(const Matrix& X, std::span<const int> labels, const GbdtParams& params = {},
                          int num_classes = 3) {
  require(X.rows() > 0, ErrorKind::kShape, "cannot fit on zero rows");
  require(params.rounds >= 0, ErrorKind::kConfig, "rounds must be non-negative");
  require(params.eta > 0.0 && params.eta <= 1.0, ErrorKind::kConfig, "learning rate must lie in (0,1]");
  require(params.lambda >= 0.0 && params.gamma >= 0.0, ErrorKind::kConfig,
          "regularisation must be non-negative");
  require(params.max_depth >= 0, ErrorKind::kConfig, "max_depth must be non-negative");
  check_labels(labels, num_classes, X.rows());

  const std::size_t n = X.rows();
  const auto K = static_cast<std::size_t>(num_classes);
  GbdtModel m;
  m.num_classes = num_classes;
  m.num_features = X.cols();
  m.params = params;
  m.feature_gain.assign(X.cols(), 0.0);
  m.base_score.assign(K, 0.0);
  for (int y : labels) m.base_score[static_cast<std::size_t>(y)] += 1.0;
  for (auto& b : m.base_score) b = std::log(std::max(b / static_cast<double>(n), 1e-12));

  Matrix scores(n, K);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < K; ++k) scores(r, k) = m.base_score[k];
  }
  m.loss_history.push_back(detail::cross_entropy(scores, labels));

  const SortedColumns sorted(X);
  const std::vector<double> ones(n, 1.0);
  const GrowParams grow{params.max_depth, params.min_child_samples};
  std::vector<double> g(n), h(n), p(K);
  std::vector<std::vector<double>> grads(K, std::vector<double>(n)), hess(K, std::vector<double>(n));

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto s = scores.row(r);
      std::copy(s.begin(), s.end(), p.begin());
      softmax_inplace(p);
      for (std::size_t k = 0; k < K; ++k) {
        const double y = labels[r] == static_cast<int>(k) ? 1.0 : 0.0;
        grads[k][r] = p[k] - y;
        hess[k][r] = p[k] * (1.0 - p[k]);
      }
    }
    std::vector<DecisionTree> round_trees;
    round_trees.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      round_trees.push_back(grow_tree(X, sorted, ones,
                                      NewtonCriterion(grads[k], hess[k], params.lambda, params.gamma),
                                      grow, nullptr, &m.feature_gain));
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = X.row(r);
      for (std::size_t k = 0; k < K; ++k) scores(r, k) += params.eta * round_trees[k].leaf_for(row)[0];
    }
    m.trees.push_back(std::move(round_trees));
    m.loss_history.push_back(detail::cross_entropy(scores, labels));
  }
  return m;
}

}  // namespace trafficlens::tabular
