#pragma once

#include "trafficlens/datamodel.hpp"
#include "trafficlens/tabular/classifier.hpp"

namespace trafficlens::tabular {

// A classifier together with the frozen encoder of its training records.
struct SeverityModel {
  FeatureEncoder encoder;
  Classifier model;
};

inline Matrix predict_proba(const SeverityModel& m, std::span<const AccidentRecord> records) {
  return predict_proba(m.model, m.encoder.transform(records).values);
}

inline std::vector<int> predict(const SeverityModel& m, std::span<const AccidentRecord> records) {
  return argmax_rows(predict_proba(m, records));
}

}  // namespace trafficlens::tabular
