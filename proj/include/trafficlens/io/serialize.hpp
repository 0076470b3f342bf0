#pragma once

// JSON (and through it CBOR) conversions for every persisted model.

#include <string>

#include "json.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/datamodel.hpp"
#include "trafficlens/tabular/classifier.hpp"
#include "trafficlens/tabular/severity.hpp"
#include "trafficlens/timeseries/arima.hpp"
#include "trafficlens/vision/model.hpp"

namespace trafficlens {

inline void to_json(nlohmann::json& j, const Matrix& m) {
  j = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}
inline void from_json(const nlohmann::json& j, Matrix& m) {
  m = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
             j.at("data").get<std::vector<double>>());
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FeatureEncoding, name, categorical, categories, mean, scale, median)

inline void to_json(nlohmann::json& j, const FeatureEncoder& e) { j = e.features(); }
inline void from_json(const nlohmann::json& j, FeatureEncoder& e) {
  e = FeatureEncoder(j.get<std::vector<FeatureEncoding>>());
}

}  // namespace trafficlens

namespace trafficlens::tabular {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TreeNode, feature, threshold, left, right, gain, cover, value)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecisionTree, nodes)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GbdtParams, rounds, eta, max_depth, lambda, gamma, min_child_samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GbdtModel, num_classes, num_features, params, base_score, trees,
                                   feature_gain, loss_history)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ForestParams, n_trees, max_depth, min_child_samples, seed, bootstrap,
                                   max_features)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RfModel, num_classes, num_features, params, trees, feature_gain)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LogisticParams, steps, step_size, l2)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LogisticModel, num_classes, num_features, params, step_size, weights,
                                   loss_history)

inline void to_json(nlohmann::json& j, const SeverityModel& m) {
  j["encoder"] = m.encoder;
  j["type"] = std::string(kind_name(m.model));
  std::visit([&](const auto& c) { j["classifier"] = c; }, m.model);
}

inline void from_json(const nlohmann::json& j, SeverityModel& m) {
  m.encoder = j.at("encoder").get<FeatureEncoder>();
  const auto type = j.at("type").get<std::string>();
  const auto& c = j.at("classifier");
  if (type == "gbdt") {
    m.model = c.get<GbdtModel>();
  } else if (type == "rf") {
    m.model = c.get<RfModel>();
  } else if (type == "logistic") {
    m.model = c.get<LogisticModel>();
  } else {
    fail(ErrorKind::kSchema, "unknown classifier type '" + type + "'");
  }
}

}  // namespace trafficlens::tabular

namespace trafficlens::timeseries {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ArimaOrder, p, d, q)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ArimaModel, order, phi, theta, mean, sigma2, css, residuals, n_obs,
                                   iterations, converged, seasonal_period, seasonal_profile, tail)

}  // namespace trafficlens::timeseries

namespace trafficlens::vision {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Conv, in_channels, filters, kernel, stride, pad, weights, bias)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Dense, inputs, outputs, weights, bias)

inline void to_json(nlohmann::json& j, const Layer& l) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Conv> || std::is_same_v<T, Dense>) j = v;
        else j = nlohmann::json::object();
      },
      l);
  j["type"] = layer_name(l);
}

inline void from_json(const nlohmann::json& j, Layer& l) {
  const auto type = j.at("type").get<std::string>();
  if (type == "conv") {
    l = j.get<Conv>();
  } else if (type == "relu") {
    l = Relu{};
  } else if (type == "maxpool") {
    l = MaxPool{};
  } else if (type == "dense") {
    l = j.get<Dense>();
  } else {
    fail(ErrorKind::kSchema, "unknown layer type '" + type + "'");
  }
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CnnModel, input_height, input_width, input_channels, num_classes, layers)

}  // namespace trafficlens::vision
