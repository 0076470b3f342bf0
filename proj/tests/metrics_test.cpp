#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "trafficlens/core/random.hpp"
#include "trafficlens/metrics/bench.hpp"
#include "trafficlens/metrics/report.hpp"

namespace trafficlens::metrics {
namespace {

// Pairwise oracle: one point per (positive, negative) pair won, half per tie.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

TEST(Confusion, PerfectPredictionsAreDiagonal) {
  const std::vector<int> y = {0, 1, 2, 2, 1, 0, 0};
  const auto cm = confusion(y, y, 3);
  EXPECT_EQ(cm.counts, (std::vector<std::size_t>{3, 0, 0, 0, 2, 0, 0, 0, 2}));
}

TEST(Confusion, HandCountedExample) {
  const std::vector<int> a = {0, 0, 1}, p = {0, 1, 1};
  EXPECT_EQ(confusion(a, p, 2).counts, (std::vector<std::size_t>{1, 1, 0, 1}));
}

TEST(Confusion, OutOfRangeLabelIsLabelError) {
  const std::vector<int> a = {0, 3}, p = {0, 1};
  try {
    confusion(a, p, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLabel);
  }
}

TEST(Confusion, MatchesNaiveTallyOnRandomCases) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng.index(4);
    std::vector<int> a(500), p(500);
    for (std::size_t i = 0; i < 500; ++i) {
      a[i] = static_cast<int>(rng.index(k));
      p[i] = static_cast<int>(rng.index(k));
    }
    const auto cm = confusion(a, p, k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        std::size_t n = 0;
        for (std::size_t s = 0; s < 500; ++s) n += a[s] == static_cast<int>(i) && p[s] == static_cast<int>(j);
        EXPECT_EQ(cm.at(i, j), n);
      }
    }
    EXPECT_EQ(cm.total(), 500u);
    // Brute-force per-class scores straight from the label vectors.
    const auto m = prf1(cm);
    for (std::size_t c = 0; c < k; ++c) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t s = 0; s < 500; ++s) {
        const bool is_a = a[s] == static_cast<int>(c), is_p = p[s] == static_cast<int>(c);
        tp += is_a && is_p;
        fp += !is_a && is_p;
        fn += is_a && !is_p;
      }
      const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      EXPECT_NEAR(m.per_class[c].precision, prec, 1e-15);
      EXPECT_NEAR(m.per_class[c].recall, rec, 1e-15);
      EXPECT_NEAR(m.per_class[c].f1, prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0, 1e-15);
    }
  }
}

TEST(Prf1, DiagonalGivesAllOnes) {
  const std::vector<int> y = {0, 1, 2, 0, 1, 2};
  const auto m = prf1(confusion(y, y, 3));
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.macro_precision, 1.0);
  EXPECT_EQ(m.macro_recall, 1.0);
  EXPECT_EQ(m.macro_f1, 1.0);
  EXPECT_TRUE(m.warnings.empty());
}

TEST(Prf1, NeverPredictedClassIsFlaggedZero) {
  const std::vector<int> a = {0, 1, 2, 2}, p = {0, 1, 1, 1};
  const auto m = prf1(confusion(a, p, 3));
  EXPECT_EQ(m.per_class[2].precision, 0.0);
  EXPECT_EQ(m.per_class[2].f1, 0.0);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("precision"), std::string::npos);
  EXPECT_NEAR(m.macro_precision, (1.0 + 1.0 / 3.0 + 0.0) / 3.0, 1e-15);
}

TEST(Prf1, TwoByTwoHandComputation) {
  ConfusionMatrix cm{2, {50, 10, 5, 35}, {"a", "b"}};
  const auto m = prf1(cm);
  const double p0 = 50.0 / 55.0, r0 = 50.0 / 60.0;
  const double p1 = 35.0 / 45.0, r1 = 35.0 / 40.0;
  EXPECT_DOUBLE_EQ(m.per_class[0].precision, p0);
  EXPECT_DOUBLE_EQ(m.per_class[0].recall, r0);
  EXPECT_DOUBLE_EQ(m.per_class[0].f1, 2 * p0 * r0 / (p0 + r0));
  EXPECT_DOUBLE_EQ(m.per_class[1].f1, 2 * p1 * r1 / (p1 + r1));
  EXPECT_DOUBLE_EQ(m.accuracy, 85.0 / 100.0);
  EXPECT_DOUBLE_EQ(m.macro_recall, (r0 + r1) / 2);
}

TEST(Prf1, EmptyMatrixIsShapeError) {
  try {
    prf1(ConfusionMatrix{2, {0, 0, 0, 0}, {"a", "b"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(Prf1, LabelPermutationPermutesScores) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> a(200), p(200);
    for (std::size_t i = 0; i < 200; ++i) {
      a[i] = static_cast<int>(rng.index(3));
      p[i] = rng.uniform() < 0.6 ? a[i] : static_cast<int>(rng.index(3));
    }
    std::vector<int> perm = {0, 1, 2};
    rng.shuffle(perm);
    std::vector<int> pa(200), pp(200);
    for (std::size_t i = 0; i < 200; ++i) {
      pa[i] = perm[static_cast<std::size_t>(a[i])];
      pp[i] = perm[static_cast<std::size_t>(p[i])];
    }
    const auto m = prf1(confusion(a, p, 3));
    const auto mp = prf1(confusion(pa, pp, 3));
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& q = mp.per_class[static_cast<std::size_t>(perm[c])];
      EXPECT_DOUBLE_EQ(q.precision, m.per_class[c].precision);
      EXPECT_DOUBLE_EQ(q.recall, m.per_class[c].recall);
      EXPECT_DOUBLE_EQ(q.f1, m.per_class[c].f1);
    }
    const auto cm = confusion(a, p, 3);
    EXPECT_EQ(m.accuracy, static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
  }
}

TEST(RocAuc, PerfectSeparation) {
  const std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y = {1, 1, 0, 0};
  EXPECT_EQ(roc_auc(s, y).auc, 1.0);
}

TEST(RocAuc, AllTiesGiveHalf) {
  const std::vector<double> s(6, 0.3);
  const std::vector<int> y = {1, 0, 1, 0, 0, 1};
  const auto roc = roc_auc(s, y);
  EXPECT_DOUBLE_EQ(roc.auc, 0.5);
  EXPECT_DOUBLE_EQ(roc.auc_mann_whitney, 0.5);
}

TEST(RocAuc, FourPairExample) {
  const std::vector<double> s = {0.9, 0.8, 0.4, 0.3};
  const std::vector<int> y = {1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(pairwise_auc(s, y), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(s, y).auc, 0.75);
}

TEST(RocAuc, SingleClassIsDegenerate) {
  const std::vector<double> s = {0.1, 0.2};
  const std::vector<int> y = {1, 1};
  try {
    roc_auc(s, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(RocAuc, TrapezoidEqualsMannWhitneyOnRandomDraws) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng.index(200);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so that ties are common.
      s[i] = std::round(rng.uniform() * 20.0) / 20.0;
      y[i] = rng.uniform() < 0.4;
    }
    y[0] = 1;
    y[1] = 0;
    const auto roc = roc_auc(s, y);
    EXPECT_NEAR(roc.auc, roc.auc_mann_whitney, 1e-9);
    EXPECT_NEAR(roc.auc, pairwise_auc(s, y), 1e-9);
    EXPECT_EQ(roc.fpr.front(), 0.0);
    EXPECT_EQ(roc.tpr.front(), 0.0);
    EXPECT_EQ(roc.fpr.back(), 1.0);
    EXPECT_EQ(roc.tpr.back(), 1.0);
    for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
      EXPECT_GE(roc.fpr[i], roc.fpr[i - 1]);
      EXPECT_GE(roc.tpr[i], roc.tpr[i - 1]);
    }
    EXPECT_GE(roc.auc, 0.0);
    EXPECT_LE(roc.auc, 1.0);
  }
}

TEST(EvalReport, PerfectClassifierRow) {
  const std::vector<int> y = {0, 1, 2, 2, 1, 0};
  Matrix proba(6, 3, 0.0);
  for (std::size_t i = 0; i < 6; ++i) proba(i, static_cast<std::size_t>(y[i])) = 1.0;
  const auto rep = evaluate(y, proba, {"Low", "Medium", "High"}, "gbdt");
  EXPECT_EQ(rep.scores.accuracy, 1.0);
  EXPECT_EQ(rep.scores.macro_f1, 1.0);
  for (const auto& a : rep.auc) EXPECT_EQ(a.value(), 1.0);
  const auto j = to_json(rep);
  EXPECT_EQ(j["averaging"], "macro");
  EXPECT_EQ(j["classes"][1]["label"], "Medium");
  EXPECT_TRUE(j["timing"].is_object());
  const std::string csv_text = to_csv(rep);
  EXPECT_NE(csv_text.find("macro,1,1,1,6,,1"), std::string::npos);
}

TEST(EvalReport, RatesInUnitIntervalAndMacroIsMean) {
  Rng rng(4);
  const std::size_t n = 300;
  std::vector<int> y(n);
  Matrix proba(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.index(3));
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += proba(i, c) = rng.uniform();
    for (std::size_t c = 0; c < 3; ++c) proba(i, c) /= s;
  }
  const auto rep = evaluate(y, proba, {"a", "b", "c"});
  double mp = 0.0;
  for (const auto& c : rep.scores.per_class) {
    for (double v : {c.precision, c.recall, c.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    mp += c.precision / 3.0;
  }
  EXPECT_DOUBLE_EQ(rep.scores.macro_precision, mp);
}

TEST(Percentile, InterpolatesBetweenRanks) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({10, 0}, 0.95), 9.5);
}

TEST(BenchLatency, ConstantPredictorFloor) {
  volatile int sink = 0;
  const auto stats = bench_latency([&](std::size_t i) { sink = sink + static_cast<int>(i); }, 5, 200);
  EXPECT_EQ(stats.repetitions, 200u);
  EXPECT_LT(stats.p50_ms, 1.0);
  EXPECT_LE(stats.p50_ms, stats.p95_ms);
  EXPECT_FALSE(stats.hardware.empty());
}

TEST(BenchLatency, WarmupCallsAreExcluded) {
  std::size_t calls = 0;
  bench_latency([&](std::size_t) { ++calls; }, 1, 30);
  EXPECT_EQ(calls, 30u + kWarmupCalls);
}

TEST(BenchLatency, TooFewRepetitionsIsConfigError) {
  try {
    bench_latency([](std::size_t) {}, 1, 29);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(BenchScaling, OneRowPerSize) {
  std::vector<std::size_t> seen;
  const auto rows = bench_scaling(
      [&](std::size_t n, std::uint64_t) {
        seen.push_back(n);
        std::this_thread::sleep_for(std::chrono::microseconds(n));
      },
      {500, 1000, 2000}, 42);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(seen, (std::vector<std::size_t>{500, 1000, 2000}));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].train_seconds, 0.5 * rows[i - 1].train_seconds);
  EXPECT_EQ(bench_scaling([](std::size_t, std::uint64_t) {}, {7}, 1).size(), 1u);
  EXPECT_EQ(scaling_csv(rows).substr(0, 19), "size,train_seconds\n");
}

TEST(BenchScaling, DescendingSizesAreConfigError) {
  try {
    bench_scaling([](std::size_t, std::uint64_t) {}, {10, 5}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

}  // namespace
}  // namespace trafficlens::metrics
