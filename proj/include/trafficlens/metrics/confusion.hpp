#pragma once

#include <span>
#include <string>
#include <vector>

#include "trafficlens/core/error.hpp"

namespace trafficlens::metrics {

// Rows are actual classes, columns predicted.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;
  std::vector<std::string> labels;

  std::size_t at(std::size_t actual, std::size_t predicted) const {
    return counts[actual * num_classes + predicted];
  }
  std::size_t total() const {
    std::size_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
  std::size_t row_sum(std::size_t k) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < num_classes; ++j) s += at(k, j);
    return s;
  }
  std::size_t col_sum(std::size_t k) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < num_classes; ++i) s += at(i, k);
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t k = 0; k < num_classes; ++k) s += at(k, k);
    return s;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

inline std::vector<std::string> default_labels(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(std::to_string(i));
  return out;
}

inline ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted,
                                 std::size_t num_classes, std::vector<std::string> labels = {}) {
  require(actual.size() == predicted.size(), ErrorKind::kShape,
          "actual and predicted differ in length (" + std::to_string(actual.size()) + " vs " +
              std::to_string(predicted.size()) + ")");
  require(num_classes > 0, ErrorKind::kShape, "confusion matrix needs at least one class");
  if (labels.empty()) labels = default_labels(num_classes);
  require(labels.size() == num_classes, ErrorKind::kShape, "one label per class is required");
  ConfusionMatrix cm{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0), std::move(labels)};
  const int k = static_cast<int>(num_classes);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    require(actual[i] >= 0 && actual[i] < k && predicted[i] >= 0 && predicted[i] < k, ErrorKind::kLabel,
            "label out of range at sample " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(actual[i]) * num_classes + static_cast<std::size_t>(predicted[i])];
  }
  return cm;
}

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Prf1 {
  double accuracy = 0.0;
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> warnings;  // zero-division events, scored as 0
};

inline Prf1 prf1(const ConfusionMatrix& cm) {
  require(cm.num_classes > 0 && cm.total() > 0, ErrorKind::kShape, "confusion matrix is empty");
  Prf1 out;
  const double total = static_cast<double>(cm.total());
  out.accuracy = static_cast<double>(cm.trace()) / total;
  const double k = static_cast<double>(cm.num_classes);
  for (std::size_t c = 0; c < cm.num_classes; ++c) {
    ClassScores s;
    s.label = cm.labels.empty() ? std::to_string(c) : cm.labels[c];
    s.support = cm.row_sum(c);
    const double tp = static_cast<double>(cm.at(c, c));
    const std::size_t predicted = cm.col_sum(c);
    if (predicted == 0) {
      out.warnings.push_back("precision undefined for class " + s.label + " (never predicted)");
    } else {
      s.precision = tp / static_cast<double>(predicted);
    }
    if (s.support == 0) {
      out.warnings.push_back("recall undefined for class " + s.label + " (no samples)");
    } else {
      s.recall = tp / static_cast<double>(s.support);
    }
    if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    out.macro_precision += s.precision / k;
    out.macro_recall += s.recall / k;
    out.macro_f1 += s.f1 / k;
    out.per_class.push_back(std::move(s));
  }
  return out;
}

}  // namespace trafficlens::metrics
