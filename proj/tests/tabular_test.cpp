#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "test_support.hpp"
#include "trafficlens/tabular/balance.hpp"
#include "trafficlens/tabular/classifier.hpp"
#include "trafficlens/tabular/importance.hpp"
#include "trafficlens/tabular/tuning.hpp"

namespace trafficlens::tabular {
namespace {

using testing::accuracy;
using testing::make_blobs;
using testing::make_checkerboard;

Matrix column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Matrix(n, 1, std::move(v));
}

// ---------------------------------------------------------------------------
// build_tree
// ---------------------------------------------------------------------------

TEST(BuildTree, ZeroGradientsGiveSingleZeroLeaf) {
  const Matrix X = column({1, 2, 3, 4, 5});
  const Matrix g(5, 1, 0.0), h(5, 1, 1.0);
  const auto tree = build_tree(X, g, h, 0, TreeParams{4, 1.0, 0.0, 1.0});
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_EQ(tree.nodes[0].value, std::vector<double>{0.0});
}

double newton_gain(double gl, double hl, double gr, double hr, double lambda) {
  auto score = [&](double g, double h) { return h + lambda > 0 ? g * g / (h + lambda) : 0.0; };
  return 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr));
}

TEST(BuildTree, FourSampleExample) {
  const Matrix X = column({1, 2, 3, 4});
  const Matrix g(4, 1, std::vector<double>{-1, -1, 1, 1});
  const Matrix h(4, 1, 1.0);
  // Enumerate the three candidate thresholds by hand.
  const double at15 = newton_gain(-1, 1, 1, 3, 0.0);
  const double at25 = newton_gain(-2, 2, 2, 2, 0.0);
  const double at35 = newton_gain(-1, 3, 1, 1, 0.0);
  ASSERT_GT(at25, at15);
  ASSERT_GT(at25, at35);

  const auto tree = build_tree(X, g, h, 0, TreeParams{1, 0.0, 0.0, 1.0});
  ASSERT_EQ(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 2.5);
  EXPECT_DOUBLE_EQ(tree.nodes[0].gain, at25);
  EXPECT_DOUBLE_EQ(tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)].value[0], 1.0);
  EXPECT_DOUBLE_EQ(tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)].value[0], -1.0);
}

TEST(BuildTree, DepthZeroIsSingleLeaf) {
  const Matrix X = column({1, 2, 3, 4});
  const Matrix g(4, 1, std::vector<double>{-1, -1, 1, 1});
  const Matrix h(4, 1, 1.0);
  const auto tree = build_tree(X, g, h, 0, TreeParams{0, 1.0, 0.0, 1.0});
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(tree.nodes[0].value[0], 0.0);
}

TEST(BuildTree, EmptyInputIsShapeError) {
  try {
    build_tree(Matrix(0, 1), Matrix(0, 1), Matrix(0, 1), 0, TreeParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(BuildTree, DepthNeverExceedsCap) {
  Rng rng(4);
  Matrix X(200, 3);
  Matrix g(200, 1), h(200, 1, 1.0);
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t j = 0; j < 3; ++j) X(i, j) = rng.normal();
    g(i, 0) = rng.normal();
  }
  for (int depth = 0; depth <= 6; ++depth) {
    EXPECT_LE(build_tree(X, g, h, 0, TreeParams{depth, 0.5, 0.0, 1.0}).depth(), depth);
  }
}

// Property: with one feature and depth 1 the chosen threshold maximises
// the enumerated gain.
TEST(BuildTree, SmallInstanceOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.index(11);
    std::vector<double> x(n), gv(n), hv(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.index(8));
      gv[i] = rng.normal();
      hv[i] = rng.uniform(0.1, 1.0);
    }
    const double lambda = rng.uniform(0.0, 1.0);
    const Matrix X = column(x);
    const Matrix g(n, 1, gv), h(n, 1, hv);

    std::set<double> distinct(x.begin(), x.end());
    std::vector<double> values(distinct.begin(), distinct.end());
    double best = 0.0;
    double best_thr = std::nan("");
    for (std::size_t c = 0; c + 1 < values.size(); ++c) {
      const double thr = 0.5 * (values[c] + values[c + 1]);
      double gl = 0, hl = 0, gr = 0, hr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i] < thr) {
          gl += gv[i];
          hl += hv[i];
        } else {
          gr += gv[i];
          hr += hv[i];
        }
      }
      const double gain = newton_gain(gl, hl, gr, hr, lambda);
      if (gain > best + 1e-12) {
        best = gain;
        best_thr = thr;
      }
    }
    const auto tree = build_tree(X, g, h, 0, TreeParams{1, lambda, 0.0, 1.0});
    if (std::isnan(best_thr)) {
      EXPECT_EQ(tree.nodes.size(), 1u);
    } else {
      ASSERT_EQ(tree.nodes.size(), 3u) << "trial " << trial;
      EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, best_thr) << "trial " << trial;
    }
  }
}

// ---------------------------------------------------------------------------
// GBDT
// ---------------------------------------------------------------------------

TEST(FitGbdt, SeparableBlobsWithin20Rounds) {
  const auto d = make_blobs(300, 1);
  // Nearest-centroid oracle confirms separability of the generated points.
  GbdtParams p;
  p.rounds = 20;
  const auto m = fit_gbdt(d.X, d.y, p);
  EXPECT_EQ(accuracy(predict(Classifier(m), d.X), d.y), 1.0);
}

TEST(FitGbdt, CheckerboardBeatsLinearModel) {
  const auto d = make_checkerboard(400, 2);
  GbdtParams p;
  p.rounds = 50;
  p.max_depth = 3;
  const auto m = fit_gbdt(d.X, d.y, p);
  EXPECT_GE(accuracy(predict(Classifier(m), d.X), d.y), 0.99);
  const auto lr = fit_logistic(d.X, d.y);
  EXPECT_LE(accuracy(predict(Classifier(lr), d.X), d.y), 0.6);
}

TEST(FitGbdt, TrainingLossNonIncreasing) {
  const std::vector<testing::Dataset> sets = {make_blobs(300, 3), make_checkerboard(400, 4)};
  for (double eta : {0.05, 0.1, 0.3}) {
    for (const auto& d : sets) {
      GbdtParams p;
      p.rounds = 40;
      p.eta = eta;
      const auto m = fit_gbdt(d.X, d.y, p);
      ASSERT_EQ(m.loss_history.size(), 41u);
      for (std::size_t r = 1; r < m.loss_history.size(); ++r) {
        EXPECT_LE(m.loss_history[r], m.loss_history[r - 1] + 1e-9) << "eta " << eta << " round " << r;
      }
    }
  }
}

TEST(FitGbdt, BitwiseReproducible) {
  const auto d = make_checkerboard(300, 5);
  EXPECT_EQ(fit_gbdt(d.X, d.y), fit_gbdt(d.X, d.y));
}

TEST(FitGbdt, SingleClassIsDegenerate) {
  const Matrix X = column({1, 2, 3});
  const std::vector<int> y = {1, 1, 1};
  try {
    fit_gbdt(X, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(PredictProba, ZeroRoundsGivesClassPriors) {
  const auto d = make_blobs(90, 6);
  std::vector<int> y = d.y;
  y[0] = 1;  // counts: 29, 31, 30
  GbdtParams p;
  p.rounds = 0;
  const auto m = fit_gbdt(d.X, y, p);
  const auto proba = predict_proba(m, d.X);
  for (std::size_t r = 0; r < proba.rows(); ++r) {
    EXPECT_NEAR(proba(r, 0), 29.0 / 90.0, 1e-12);
    EXPECT_NEAR(proba(r, 1), 31.0 / 90.0, 1e-12);
    EXPECT_NEAR(proba(r, 2), 30.0 / 90.0, 1e-12);
  }
}

TEST(PredictProba, RowsOnTheSimplexForAllModels) {
  const auto d = make_checkerboard(300, 7);
  GbdtParams gp;
  gp.rounds = 10;
  ForestParams fp;
  fp.n_trees = 10;
  const std::vector<Classifier> models = {fit_gbdt(d.X, d.y, gp), fit_random_forest(d.X, d.y, fp),
                                          fit_logistic(d.X, d.y)};
  Rng rng(70);
  Matrix Xr(100, 2);
  for (auto& v : Xr.data()) v = rng.uniform(-3.0, 3.0);
  for (const auto& m : models) {
    const auto proba = predict_proba(m, Xr);
    for (std::size_t r = 0; r < proba.rows(); ++r) {
      double s = 0.0;
      for (double v : proba.row(r)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(PredictProba, SchemaMismatchIsShapeError) {
  const auto d = make_blobs(60, 8);
  GbdtParams p;
  p.rounds = 2;
  const auto m = fit_gbdt(d.X, d.y, p);
  try {
    predict_proba(m, Matrix(3, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(Invariance, MonotoneTransformKeepsPredictions) {
  auto d = make_checkerboard(300, 9);
  Matrix Xexp = d.X;
  for (auto& v : Xexp.data()) v = std::exp(v);
  GbdtParams gp;
  gp.rounds = 20;
  gp.max_depth = 3;
  EXPECT_EQ(predict(Classifier(fit_gbdt(d.X, d.y, gp)), d.X),
            predict(Classifier(fit_gbdt(Xexp, d.y, gp)), Xexp));
  ForestParams fp;
  fp.n_trees = 15;
  fp.seed = 3;
  EXPECT_EQ(predict(Classifier(fit_random_forest(d.X, d.y, fp)), d.X),
            predict(Classifier(fit_random_forest(Xexp, d.y, fp)), Xexp));
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

// Independent recursive Gini CART used as the oracle for a degenerate forest.
struct OracleNode {
  int feature = -1;
  double threshold = 0.0;
  std::unique_ptr<OracleNode> left, right;
  std::vector<double> dist;
};

std::unique_ptr<OracleNode> oracle_gini(const Matrix& X, const std::vector<int>& y,
                                        const std::vector<std::size_t>& rows, int depth, int max_depth,
                                        int K) {
  auto node = std::make_unique<OracleNode>();
  std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
  for (auto r : rows) counts[static_cast<std::size_t>(y[r])] += 1.0;
  auto purity = [&](const std::vector<double>& c) {
    double n = 0, s = 0;
    for (double v : c) {
      n += v;
      s += v * v;
    }
    return n > 0 ? s / n : 0.0;
  };
  node->dist = counts;
  for (auto& v : node->dist) v /= static_cast<double>(rows.size());
  if (depth >= max_depth || rows.size() < 2) return node;
  double best = 0.0;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    std::set<double> vals;
    for (auto r : rows) vals.insert(X(r, f));
    std::vector<double> v(vals.begin(), vals.end());
    for (std::size_t c = 0; c + 1 < v.size(); ++c) {
      const double thr = 0.5 * (v[c] + v[c + 1]);
      std::vector<double> l(static_cast<std::size_t>(K), 0.0), rr(static_cast<std::size_t>(K), 0.0);
      for (auto r : rows) (X(r, f) < thr ? l : rr)[static_cast<std::size_t>(y[r])] += 1.0;
      const double gain = purity(l) + purity(rr) - purity(counts);
      if (gain > best + 1e-12) {
        best = gain;
        node->feature = static_cast<int>(f);
        node->threshold = thr;
      }
    }
  }
  if (node->feature < 0) return node;
  std::vector<std::size_t> lr, rr;
  for (auto r : rows) (X(r, static_cast<std::size_t>(node->feature)) < node->threshold ? lr : rr).push_back(r);
  node->left = oracle_gini(X, y, lr, depth + 1, max_depth, K);
  node->right = oracle_gini(X, y, rr, depth + 1, max_depth, K);
  return node;
}

const std::vector<double>& oracle_predict(const OracleNode& n, std::span<const double> row) {
  if (n.feature < 0) return n.dist;
  return oracle_predict(row[static_cast<std::size_t>(n.feature)] < n.threshold ? *n.left : *n.right, row);
}

TEST(FitRandomForest, DegenerateForestMatchesGiniCart) {
  const auto d = make_blobs(150, 10);
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.max_features = 2;
  p.max_depth = 5;
  const auto m = fit_random_forest(d.X, d.y, p);
  std::vector<std::size_t> rows(d.y.size());
  std::iota(rows.begin(), rows.end(), 0u);
  const auto oracle = oracle_gini(d.X, d.y, rows, 0, 5, 3);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> row = {rng.uniform(-3, 13), rng.uniform(-3, 12)};
    std::vector<double> out(3);
    predict_row(m, row, out);
    const auto& expect = oracle_predict(*oracle, row);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(out[k], expect[k], 1e-12);
  }
}

TEST(FitRandomForest, SeparableBlobsHoldout) {
  const auto train = make_blobs(300, 12);
  const auto test = make_blobs(300, 13);
  ForestParams p;
  p.n_trees = 50;
  const auto m = fit_random_forest(train.X, train.y, p);
  EXPECT_GE(accuracy(predict(Classifier(m), test.X), test.y), 0.99);
}

TEST(FitRandomForest, SeedControlsBootstrap) {
  const auto d = make_checkerboard(200, 14);
  ForestParams p;
  p.n_trees = 5;
  p.seed = 1;
  const auto a = fit_random_forest(d.X, d.y, p);
  EXPECT_EQ(a, fit_random_forest(d.X, d.y, p));
  p.seed = 2;
  EXPECT_NE(a.trees, fit_random_forest(d.X, d.y, p).trees);
}

TEST(FitRandomForest, PureLeafTreeReturnsItsDistribution) {
  // All labels identical except one class needed for validity; one tree,
  // depth 0 leaf holds the class frequencies.
  const Matrix X = column({1, 2, 3, 4});
  const std::vector<int> y = {0, 0, 0, 2};
  ForestParams p;
  p.n_trees = 1;
  p.max_depth = 0;
  p.bootstrap = false;
  const auto m = fit_random_forest(X, y, p);
  const auto proba = predict_proba(m, column({-5, 100}));
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_DOUBLE_EQ(proba(r, 0), 0.75);
    EXPECT_DOUBLE_EQ(proba(r, 2), 0.25);
  }
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

TEST(FitLogistic, SeparatedOneDimensionalClasses) {
  const Matrix X = column({-3, -2.5, -2, -1.5, 1.5, 2, 2.5, 3});
  const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  const auto m = fit_logistic(X, y, LogisticParams{500, 0.0, 1e-4}, 2);
  EXPECT_EQ(accuracy(predict(Classifier(m), X), y), 1.0);
}

TEST(FitLogistic, AnalyticGradientMatchesFiniteDifferences) {
  const auto d = make_blobs(60, 15);
  Rng rng(16);
  for (int point = 0; point < 5; ++point) {
    Matrix W(3, 3);
    for (auto& v : W.data()) v = rng.normal(0.0, 0.5);
    Matrix grad;
    logistic_objective(W, d.X, d.y, 0.01, &grad);
    for (std::size_t i = 0; i < W.data().size(); ++i) {
      Matrix up = W, down = W;
      const double h = 1e-5;
      up.data()[i] += h;
      down.data()[i] -= h;
      const double fd = (logistic_objective(up, d.X, d.y, 0.01) - logistic_objective(down, d.X, d.y, 0.01)) / (2 * h);
      const double a = grad.data()[i];
      EXPECT_LT(std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8}), 1e-5);
    }
  }
}

TEST(FitLogistic, LossNonIncreasingAndConverges) {
  auto d = make_blobs(90, 17);
  for (auto& v : d.X.data()) v /= 10.0;
  const auto m = fit_logistic(d.X, d.y, LogisticParams{20000, 0.0, 0.1});
  for (std::size_t i = 1; i < m.loss_history.size(); ++i) {
    EXPECT_LE(m.loss_history[i], m.loss_history[i - 1] + 1e-12);
  }
  Matrix grad;
  logistic_objective(m.weights, d.X, d.y, 0.1, &grad);
  double norm = 0.0;
  for (double g : grad.data()) norm += g * g;
  EXPECT_LT(std::sqrt(norm), 1e-4);
}

// ---------------------------------------------------------------------------
// Importance
// ---------------------------------------------------------------------------

TEST(Importance, SingleInformativeFeatureTakesAllGain) {
  Rng rng(18);
  Matrix X(300, 3);
  std::vector<int> y(300);
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y[i] = X(i, 0) > 0.0 ? 1 : 0;
  }
  const std::vector<ColumnInfo> cols = {{"x0", ColumnKind::kNumeric, "x0", ""},
                                        {"x1", ColumnKind::kNumeric, "x1", ""},
                                        {"x2", ColumnKind::kNumeric, "x2", ""}};
  GbdtParams gp;
  gp.rounds = 20;
  const auto report = feature_importance(fit_gbdt(X, y, gp, 2), cols);
  ASSERT_FALSE(report.empty());
  EXPECT_EQ(report[0].feature, "x0");
  double total = 0.0;
  for (const auto& e : report) total += e.gain;
  EXPECT_DOUBLE_EQ(report[0].gain, total);

  ForestParams fp;
  fp.n_trees = 10;
  fp.max_features = 3;
  fp.bootstrap = false;
  const auto rf_report = feature_importance(fit_random_forest(X, y, fp, 2), cols);
  EXPECT_EQ(rf_report[0].feature, "x0");
}

TEST(Importance, ConstantFeatureHasZeroGainAndOneHotFolds) {
  Rng rng(19);
  Matrix X(200, 4);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t cat = rng.index(3);
    for (std::size_t c = 0; c < 3; ++c) X(i, c) = c == cat ? 1.0 : 0.0;
    X(i, 3) = 7.0;
    y[i] = cat == 0 ? 0 : (cat == 1 ? 1 : 2);
  }
  const std::vector<ColumnInfo> cols = {{"w=a", ColumnKind::kOneHot, "w", "a"},
                                        {"w=b", ColumnKind::kOneHot, "w", "b"},
                                        {"w=c", ColumnKind::kOneHot, "w", "c"},
                                        {"k", ColumnKind::kNumeric, "k", ""}};
  GbdtParams gp;
  gp.rounds = 5;
  const auto m = fit_gbdt(X, y, gp);
  EXPECT_EQ(m.feature_gain[3], 0.0);
  const auto report = feature_importance(m, cols);
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0].feature, "w");
  EXPECT_EQ(report[1].feature, "k");
  EXPECT_EQ(report[1].gain, 0.0);
}

TEST(Importance, NoSplitsGiveEmptyReport) {
  const Matrix X = column({1, 2, 3, 4});
  const std::vector<int> y = {0, 1, 0, 1};
  GbdtParams gp;
  gp.max_depth = 0;
  gp.rounds = 3;
  const std::vector<ColumnInfo> cols = {{"x", ColumnKind::kNumeric, "x", ""}};
  EXPECT_TRUE(feature_importance(fit_gbdt(X, y, gp), cols).empty());
}

// ---------------------------------------------------------------------------
// Balancing
// ---------------------------------------------------------------------------

std::vector<int> labels_with_counts(std::vector<std::size_t> counts) {
  std::vector<int> y;
  for (std::size_t k = 0; k < counts.size(); ++k) y.insert(y.end(), counts[k], static_cast<int>(k));
  return y;
}

TEST(Balance, PaperTrainingCountsDownsample) {
  const auto y = labels_with_counts({4231, 7532, 2763});
  const auto idx = balance_indices(y, 3, BalanceStrategy::kDownsample, 42);
  EXPECT_EQ(idx.size(), 8289u);
  std::map<int, std::size_t> counts;
  for (auto i : idx) ++counts[y[i]];
  EXPECT_EQ(counts[0], 2763u);
  EXPECT_EQ(counts[1], 2763u);
  EXPECT_EQ(counts[2], 2763u);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), idx.size());
}

TEST(Balance, BalancedInputUnchangedByDownsample) {
  const auto y = labels_with_counts({5, 5, 5});
  const auto idx = balance_indices(y, 3, BalanceStrategy::kDownsample, 1);
  std::vector<std::size_t> all(15);
  std::iota(all.begin(), all.end(), 0u);
  EXPECT_EQ(idx, all);
}

TEST(Balance, OversampleDrawsFromOriginals) {
  const auto y = labels_with_counts({5, 2});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto idx = balance_indices(y, 2, BalanceStrategy::kOversample, seed);
    std::map<int, std::size_t> counts;
    for (auto i : idx) {
      ++counts[y[i]];
      if (y[i] == 1) {
        EXPECT_TRUE(i == 5 || i == 6);
      }
    }
    EXPECT_EQ(counts[0], 5u);
    EXPECT_EQ(counts[1], 5u);
  }
}

TEST(Balance, EmptyClassIsDegenerate) {
  const auto y = labels_with_counts({3, 0, 4});
  try {
    balance_indices(y, 3, BalanceStrategy::kOversample, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(Balance, SeededReproducibility) {
  const auto y = labels_with_counts({40, 10, 25});
  EXPECT_EQ(balance_indices(y, 3, BalanceStrategy::kDownsample, 5),
            balance_indices(y, 3, BalanceStrategy::kDownsample, 5));
  EXPECT_NE(balance_indices(y, 3, BalanceStrategy::kDownsample, 5),
            balance_indices(y, 3, BalanceStrategy::kDownsample, 6));
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

TEST(Ensemble, SingleModelIsIdentity) {
  const auto d = make_blobs(60, 20);
  GbdtParams gp;
  gp.rounds = 5;
  const std::vector<Classifier> models = {fit_gbdt(d.X, d.y, gp)};
  const std::vector<double> w = {1.0};
  EXPECT_EQ(ensemble_predict(models, d.X, w), predict_proba(models[0], d.X));
}

TEST(Ensemble, WeightedMeanArithmetic) {
  const std::vector<Matrix> members = {Matrix(1, 3, std::vector<double>{1, 0, 0}),
                                       Matrix(1, 3, std::vector<double>{0, 1, 0})};
  const std::vector<double> w = {0.5, 0.5};
  const auto out = ensemble_predict(std::span<const Matrix>(members), w);
  EXPECT_EQ(out.data(), (std::vector<double>{0.5, 0.5, 0.0}));
}

TEST(Ensemble, MismatchedClassSetsAreSchemaErrors) {
  const auto d = make_blobs(60, 21);
  GbdtParams gp;
  gp.rounds = 2;
  const std::vector<Classifier> models = {fit_gbdt(d.X, d.y, gp, 3), fit_gbdt(d.X, d.y, gp, 4)};
  const std::vector<double> w = {0.5, 0.5};
  try {
    ensemble_predict(models, d.X, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
  }
}

TEST(Ensemble, BlobEnsembleNotWorseThanBestMember) {
  const auto train = make_blobs(300, 22);
  const auto test = make_blobs(300, 23);
  GbdtParams gp;
  gp.rounds = 30;
  ForestParams fp;
  fp.n_trees = 30;
  const std::vector<Classifier> models = {fit_gbdt(train.X, train.y, gp),
                                          fit_random_forest(train.X, train.y, fp),
                                          fit_logistic(train.X, train.y)};
  double best = 0.0;
  for (const auto& m : models) best = std::max(best, accuracy(predict(m, test.X), test.y));
  const std::vector<double> w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto ens = argmax_rows(ensemble_predict(models, test.X, w));
  EXPECT_GE(accuracy(ens, test.y), best - 0.02);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

FitFunction gbdt_fit() {
  return [](const Matrix& X, std::span<const int> y, const ParamSet& p) -> Classifier {
    GbdtParams base;
    base.rounds = 30;
    return fit_gbdt(X, y, gbdt_params_from(p, base));
  };
}

TEST(GridSearch, SingleCellWins) {
  const auto d = make_blobs(60, 24);
  ParamGrid grid{{{"max_depth", {2}}}};
  const auto r = grid_search(gbdt_fit(), d.X, d.y, grid);
  EXPECT_EQ(r.best_index, 0u);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0].fold_accuracy.size(), 3u);
}

TEST(GridSearch, DeeperTreesWinOnCheckerboard) {
  const auto d = make_checkerboard(300, 25);
  ParamGrid grid{{{"max_depth", {1, 4}}}};
  const auto r = grid_search(gbdt_fit(), d.X, d.y, grid);
  EXPECT_EQ(r.best.at("max_depth"), 4.0);
  EXPECT_GT(r.cells[1].mean_accuracy, r.cells[0].mean_accuracy);
}

TEST(GridSearch, DeterministicScoreTable) {
  const auto d = make_checkerboard(150, 26);
  ParamGrid grid{{{"max_depth", {1, 2}}, {"eta", {0.1, 0.3}}}};
  const auto a = grid_search(gbdt_fit(), d.X, d.y, grid);
  const auto b = grid_search(gbdt_fit(), d.X, d.y, grid);
  ASSERT_EQ(a.cells.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.cells[i].params, b.cells[i].params);
    EXPECT_EQ(a.cells[i].fold_accuracy, b.cells[i].fold_accuracy);
  }
  EXPECT_EQ(a.cells[1].params.at("max_depth"), 1.0);
  EXPECT_EQ(a.cells[1].params.at("eta"), 0.3);
}

TEST(GridSearch, TooManyFoldsIsConfigError) {
  const Matrix X = column({1, 2, 3, 4, 5});
  const std::vector<int> y = {0, 0, 0, 1, 1};
  ParamGrid grid{{{"max_depth", {1}}}};
  try {
    grid_search(gbdt_fit(), X, y, grid, GridSearchOptions{3, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(GridSearch, RandomSubsetKeepsGridOrder) {
  const auto d = make_blobs(60, 27);
  ParamGrid grid{{{"max_depth", {1, 2, 3}}, {"eta", {0.1, 0.2}}}};
  const auto r = grid_search(gbdt_fit(), d.X, d.y, grid, GridSearchOptions{3, 9, 3});
  ASSERT_EQ(r.cells.size(), 3u);
  const auto all = grid.cells();
  std::size_t pos = 0;
  for (const auto& c : r.cells) {
    while (pos < all.size() && all[pos] != c.params) ++pos;
    EXPECT_LT(pos, all.size());
  }
}

}  // namespace
}  // namespace trafficlens::tabular
