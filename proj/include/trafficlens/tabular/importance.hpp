#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/datamodel.hpp"
#include "trafficlens/tabular/forest.hpp"
#include "trafficlens/tabular/gbdt.hpp"

namespace trafficlens::tabular {

struct ImportanceEntry {
  std::string feature;
  double gain = 0.0;

  bool operator==(const ImportanceEntry&) const = default;
};

using ImportanceReport = std::vector<ImportanceEntry>;

// Total split gain per source feature (one-hot columns folded together),
// descending, ties by name. A model without splits yields an empty report.
inline ImportanceReport feature_importance(std::span<const double> column_gain,
                                           std::span<const ColumnInfo> columns) {
  require(column_gain.size() == columns.size(), ErrorKind::kSchema,
          "column metadata does not match the model's feature count");
  double total = 0.0;
  for (double g : column_gain) total += g;
  if (total <= 0.0) return {};
  std::map<std::string, double> by_source;
  for (std::size_t i = 0; i < columns.size(); ++i) by_source[columns[i].source] += column_gain[i];
  ImportanceReport report;
  for (const auto& [name, gain] : by_source) report.push_back({name, gain});
  std::stable_sort(report.begin(), report.end(),
                   [](const auto& a, const auto& b) { return a.gain > b.gain; });
  return report;
}

inline ImportanceReport feature_importance(const GbdtModel& m, std::span<const ColumnInfo> columns) {
  return feature_importance(m.feature_gain, columns);
}

inline ImportanceReport feature_importance(const RfModel& m, std::span<const ColumnInfo> columns) {
  return feature_importance(m.feature_gain, columns);
}

}  // namespace trafficlens::tabular
