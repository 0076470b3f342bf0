#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/numeric.hpp"
#include "trafficlens/tabular/forest.hpp"
#include "trafficlens/tabular/gbdt.hpp"
#include "trafficlens/tabular/logistic.hpp"

namespace trafficlens::tabular {

using Classifier = std::variant<GbdtModel, RfModel, LogisticModel>;

inline std::string_view kind_name(const Classifier& c) {
  switch (c.index()) {
    case 0: return "gbdt";
    case 1: return "rf";
    default: return "logistic";
  }
}

inline int num_classes(const Classifier& c) {
  return std::visit([](const auto& m) { return m.num_classes; }, c);
}

inline std::size_t num_features(const Classifier& c) {
  return std::visit([](const auto& m) { return m.num_features; }, c);
}

inline Matrix predict_proba(const Classifier& c, const Matrix& X) {
  return std::visit([&](const auto& m) { return predict_proba(m, X); }, c);
}

inline void predict_row(const Classifier& c, std::span<const double> row, std::span<double> out) {
  std::visit([&](const auto& m) { predict_row(m, row, out); }, c);
}

inline std::vector<int> predict(const Classifier& c, const Matrix& X) {
  return argmax_rows(predict_proba(c, X));
}

// Weighted arithmetic mean of member probabilities.
inline Matrix ensemble_predict(std::span<const Matrix> member_proba, std::span<const double> weights) {
  require(!member_proba.empty(), ErrorKind::kConfig, "ensemble needs at least one model");
  require(weights.size() == member_proba.size(), ErrorKind::kConfig,
          "ensemble needs one weight per model");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), ErrorKind::kConfig, "ensemble weights must be non-negative");
    total += w;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorKind::kConfig, "ensemble weights must sum to 1");
  const auto& first = member_proba.front();
  Matrix out(first.rows(), first.cols());
  for (std::size_t i = 0; i < member_proba.size(); ++i) {
    const auto& p = member_proba[i];
    require(p.cols() == first.cols(), ErrorKind::kSchema, "ensemble members disagree on the class set");
    require(p.rows() == first.rows(), ErrorKind::kShape, "ensemble members disagree on row count");
    for (std::size_t j = 0; j < p.data().size(); ++j) out.data()[j] += weights[i] * p.data()[j];
  }
  return out;
}

inline Matrix ensemble_predict(std::span<const Classifier> models, const Matrix& X,
                               std::span<const double> weights) {
  require(!models.empty(), ErrorKind::kConfig, "ensemble needs at least one model");
  std::vector<Matrix> proba;
  for (const auto& m : models) {
    require(num_classes(m) == num_classes(models.front()), ErrorKind::kSchema,
            "ensemble members disagree on the class set");
    proba.push_back(predict_proba(m, X));
  }
  return ensemble_predict(std::span<const Matrix>(proba), weights);
}

}  // namespace trafficlens::tabular
