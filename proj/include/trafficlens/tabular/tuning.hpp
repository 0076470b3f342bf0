#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/tabular/classifier.hpp"

namespace trafficlens::tabular {

using ParamSet = std::map<std::string, double>;

// Ordered axes; cells enumerate the cartesian product with the last axis
// varying fastest.
struct ParamGrid {
  std::vector<std::pair<std::string, std::vector<double>>> axes;

  std::vector<ParamSet> cells() const {
    std::vector<ParamSet> out;
    if (axes.empty()) return out;
    for (const auto& [name, values] : axes) {
      require(!values.empty(), ErrorKind::kConfig, "grid axis '" + name + "' has no values");
    }
    std::vector<std::size_t> pos(axes.size(), 0);
    while (true) {
      ParamSet cell;
      for (std::size_t a = 0; a < axes.size(); ++a) cell[axes[a].first] = axes[a].second[pos[a]];
      out.push_back(std::move(cell));
      std::size_t a = axes.size();
      while (a > 0) {
        --a;
        if (++pos[a] < axes[a].second.size()) break;
        pos[a] = 0;
        if (a == 0) return out;
      }
    }
  }
};

using FitFunction =
    std::function<Classifier(const Matrix& X, std::span<const int> labels, const ParamSet& params)>;

struct CellScore {
  ParamSet params;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  ParamSet best;
  std::vector<CellScore> cells;
};

struct GridSearchOptions {
  int folds = 3;
  std::uint64_t seed = 42;
  std::size_t max_cells = 0;  // 0 evaluates every cell; otherwise a seeded subset
};

// Stratified fold assignment: each class is shuffled and dealt round-robin.
inline std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  require(folds >= 2, ErrorKind::kConfig, "cross-validation needs at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    require(members.size() >= static_cast<std::size_t>(folds), ErrorKind::kConfig,
            "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                " samples, fewer than " + std::to_string(folds) + " folds");
  }
  Rng rng(seed);
  std::vector<int> fold(labels.size(), 0);
  for (auto& [label, members] : by_class) {
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  return fold;
}

// Exhaustive (or seeded random-subset) grid search scored by k-fold
// cross-validated accuracy. The best cell has the highest mean accuracy,
// earliest grid position on ties.
inline GridSearchResult grid_search(const FitFunction& fit, const Matrix& X, std::span<const int> labels,
                                    const ParamGrid& grid, const GridSearchOptions& opts = {}) {
  auto cells = grid.cells();
  require(!cells.empty(), ErrorKind::kConfig, "parameter grid is empty");
  require(X.rows() == labels.size(), ErrorKind::kShape, "label count does not match row count");
  const auto fold = stratified_folds(labels, opts.folds, opts.seed);

  if (opts.max_cells > 0 && opts.max_cells < cells.size()) {
    std::vector<std::size_t> pick(cells.size());
    for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
    Rng rng(opts.seed ^ 0x9E3779B97F4A7C15ull);
    rng.shuffle(pick);
    pick.resize(opts.max_cells);
    std::sort(pick.begin(), pick.end());
    std::vector<ParamSet> subset;
    for (auto i : pick) subset.push_back(cells[i]);
    cells = std::move(subset);
  }

  GridSearchResult result;
  double best_score = -1.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellScore score;
    score.params = cells[c];
    for (int f = 0; f < opts.folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? test : train).push_back(i);
      const Matrix Xtr = X.select_rows(train);
      const auto ytr = select(labels, std::span<const std::size_t>(train));
      const auto model = fit(Xtr, ytr, cells[c]);
      const auto pred = predict(model, X.select_rows(test));
      std::size_t hit = 0;
      for (std::size_t i = 0; i < test.size(); ++i) hit += pred[i] == labels[test[i]];
      score.fold_accuracy.push_back(static_cast<double>(hit) / static_cast<double>(test.size()));
    }
    double sum = 0.0;
    for (double a : score.fold_accuracy) sum += a;
    score.mean_accuracy = sum / static_cast<double>(opts.folds);
    if (score.mean_accuracy > best_score) {
      best_score = score.mean_accuracy;
      result.best_index = c;
    }
    result.cells.push_back(std::move(score));
  }
  result.best = result.cells[result.best_index].params;
  return result;
}

inline GbdtParams gbdt_params_from(const ParamSet& p, GbdtParams base = {}) {
  for (const auto& [name, value] : p) {
    if (name == "rounds") base.rounds = static_cast<int>(value);
    else if (name == "eta") base.eta = value;
    else if (name == "max_depth") base.max_depth = static_cast<int>(value);
    else if (name == "lambda") base.lambda = value;
    else if (name == "gamma") base.gamma = value;
    else if (name == "min_child_samples") base.min_child_samples = value;
    else fail(ErrorKind::kConfig, "unknown gbdt parameter '" + name + "'");
  }
  return base;
}

inline ForestParams forest_params_from(const ParamSet& p, ForestParams base = {}) {
  for (const auto& [name, value] : p) {
    if (name == "n_trees") base.n_trees = static_cast<int>(value);
    else if (name == "max_depth") base.max_depth = static_cast<int>(value);
    else if (name == "min_child_samples") base.min_child_samples = value;
    else if (name == "max_features") base.max_features = static_cast<int>(value);
    else fail(ErrorKind::kConfig, "unknown forest parameter '" + name + "'");
  }
  return base;
}

inline LogisticParams logistic_params_from(const ParamSet& p, LogisticParams base = {}) {
  for (const auto& [name, value] : p) {
    if (name == "steps") base.steps = static_cast<int>(value);
    else if (name == "step_size") base.step_size = value;
    else if (name == "l2") base.l2 = value;
    else fail(ErrorKind::kConfig, "unknown logistic parameter '" + name + "'");
  }
  return base;
}

}  // namespace trafficlens::tabular
