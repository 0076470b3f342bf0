#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/numeric.hpp"
#include "trafficlens/io/csv.hpp"
#include "trafficlens/metrics/confusion.hpp"
#include "trafficlens/metrics/roc.hpp"

namespace trafficlens::metrics {

struct EvalReport {
  std::string model;
  std::size_t samples = 0;
  Prf1 scores;
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> auc;  // per class; empty when no probabilities
  std::optional<double> train_seconds;
  std::optional<double> inference_ms;  // per sample
};

// Missing per-class AUC means that class had no positive (or no negative)
// samples in the evaluated set.
inline EvalReport evaluate(std::span<const int> actual, const Matrix& proba,
                           std::vector<std::string> labels, std::string model = {}) {
  require(proba.rows() == actual.size(), ErrorKind::kShape, "probabilities and labels differ in length");
  const std::size_t k = proba.cols();
  std::vector<int> predicted(actual.size());
  for (std::size_t r = 0; r < proba.rows(); ++r) predicted[r] = static_cast<int>(argmax(proba.row(r)));
  EvalReport rep;
  rep.model = std::move(model);
  rep.samples = actual.size();
  rep.confusion = confusion(actual, predicted, k, std::move(labels));
  rep.scores = prf1(rep.confusion);
  std::vector<double> col(actual.size());
  std::vector<int> pos(actual.size());
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t n_pos = 0;
    for (std::size_t r = 0; r < actual.size(); ++r) {
      col[r] = proba(r, c);
      pos[r] = actual[r] == static_cast<int>(c);
      n_pos += pos[r];
    }
    if (n_pos == 0 || n_pos == actual.size()) {
      rep.auc.emplace_back();
    } else {
      rep.auc.emplace_back(roc_auc(col, pos).auc);
    }
  }
  return rep;
}

inline EvalReport evaluate_labels(std::span<const int> actual, std::span<const int> predicted,
                                  std::vector<std::string> labels, std::string model = {}) {
  EvalReport rep;
  rep.model = std::move(model);
  rep.samples = actual.size();
  const std::size_t k = labels.size();
  rep.confusion = confusion(actual, predicted, k, std::move(labels));
  rep.scores = prf1(rep.confusion);
  return rep;
}

inline nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  json j;
  j["model"] = r.model;
  j["samples"] = r.samples;
  j["accuracy"] = r.scores.accuracy;
  j["averaging"] = "macro";
  j["macro"] = {{"precision", r.scores.macro_precision},
                {"recall", r.scores.macro_recall},
                {"f1", r.scores.macro_f1}};
  json classes = json::array();
  for (std::size_t c = 0; c < r.scores.per_class.size(); ++c) {
    const auto& s = r.scores.per_class[c];
    json e = {{"label", s.label}, {"precision", s.precision}, {"recall", s.recall},
              {"f1", s.f1}, {"support", s.support}};
    if (c < r.auc.size()) e["auc"] = r.auc[c] ? json(*r.auc[c]) : json(nullptr);
    classes.push_back(std::move(e));
  }
  j["classes"] = std::move(classes);
  json rows = json::array();
  for (std::size_t i = 0; i < r.confusion.num_classes; ++i) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.num_classes; ++p) row.push_back(r.confusion.at(i, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = {{"labels", r.confusion.labels}, {"rows_actual_cols_predicted", rows}};
  j["warnings"] = r.scores.warnings;
  json timing = json::object();
  if (r.train_seconds) timing["train_seconds"] = *r.train_seconds;
  if (r.inference_ms) timing["inference_ms_per_sample"] = *r.inference_ms;
  j["timing"] = std::move(timing);
  return j;
}

// One row per class, then a macro row; accuracy sits in its own column.
inline std::string to_csv(const EvalReport& r) {
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"label", "precision", "recall", "f1", "support", "auc", "accuracy"});
  for (std::size_t c = 0; c < r.scores.per_class.size(); ++c) {
    const auto& s = r.scores.per_class[c];
    const bool has_auc = c < r.auc.size() && r.auc[c].has_value();
    w.row({s.label, csv::format_number(s.precision), csv::format_number(s.recall), csv::format_number(s.f1),
           std::to_string(s.support), has_auc ? csv::format_number(*r.auc[c]) : "",
           csv::format_number(r.scores.accuracy)});
  }
  w.row({"macro", csv::format_number(r.scores.macro_precision), csv::format_number(r.scores.macro_recall),
         csv::format_number(r.scores.macro_f1), std::to_string(r.samples), "",
         csv::format_number(r.scores.accuracy)});
  return os.str();
}

inline std::string roc_csv(const RocCurve& roc) {
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"threshold", "fpr", "tpr"});
  for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
    w.row({csv::format_number(roc.thresholds[i]), csv::format_number(roc.fpr[i]), csv::format_number(roc.tpr[i])});
  }
  return os.str();
}

}  // namespace trafficlens::metrics
