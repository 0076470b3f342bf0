#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"

namespace trafficlens::metrics {

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // thresholds[0] is +inf for the (0,0) point
  double auc = 0.0;                // trapezoid
  double auc_mann_whitney = 0.0;
};

// Rank-based Mann-Whitney statistic with midranks for ties.
inline double mann_whitney_auc(std::span<const double> scores, std::span<const int> positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n - n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// `positive` is the one-vs-rest indicator for the class the scores belong to.
inline RocCurve roc_auc(std::span<const double> scores, std::span<const int> positive) {
  require(scores.size() == positive.size(), ErrorKind::kShape, "scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int p : positive) n_pos += p != 0;
  const std::size_t n_neg = positive.size() - n_pos;
  require(n_pos > 0 && n_neg > 0, ErrorKind::kDegenerate, "ROC needs both positive and negative samples");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (positive[order[i]]) ++tp; else ++fp;
      ++i;
    }
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
    roc.thresholds.push_back(s);
  }
  for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
    roc.auc += (roc.fpr[i] - roc.fpr[i - 1]) * 0.5 * (roc.tpr[i] + roc.tpr[i - 1]);
  }
  roc.auc_mann_whitney = mann_whitney_auc(scores, positive);
  return roc;
}

}  // namespace trafficlens::metrics
