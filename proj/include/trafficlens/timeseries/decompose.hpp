#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/datamodel.hpp"

namespace trafficlens::timeseries {

// Classical additive decomposition: observed = trend + seasonal + residual.
//
// trend and residual are NaN outside [trend_begin, trend_end), the indices
// where the centred moving average has a full window.
struct Decomposition {
  std::size_t period = 0;
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> residual;
  std::vector<double> profile;  // one seasonal value per phase, sums to zero
  std::size_t trend_begin = 0;
  std::size_t trend_end = 0;

  bool trend_defined(std::size_t i) const { return i >= trend_begin && i < trend_end; }
};

// Centred moving average of width `period`; the 2xP average when P is even.
inline std::vector<double> centered_moving_average(std::span<const double> x, std::size_t period,
                                                   std::size_t& begin, std::size_t& end) {
  const std::size_t n = x.size();
  const std::size_t half = period / 2;
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  begin = half;
  end = n - half;
  const double inv = 1.0 / static_cast<double>(period);
  for (std::size_t t = begin; t < end; ++t) {
    double acc = 0.0;
    if (period % 2 == 1) {
      for (std::size_t k = t - half; k <= t + half; ++k) acc += x[k];
    } else {
      acc = 0.5 * (x[t - half] + x[t + half]);
      for (std::size_t k = t - half + 1; k < t + half; ++k) acc += x[k];
    }
    out[t] = acc * inv;
  }
  return out;
}

inline Decomposition decompose(std::span<const double> observed, std::size_t period) {
  require(period >= 2, ErrorKind::kConfig, "decomposition period must be at least 2");
  require(observed.size() >= 2 * period, ErrorKind::kLength,
          "decomposition needs at least two full periods (" + std::to_string(2 * period) +
              " values), got " + std::to_string(observed.size()));
  const std::size_t n = observed.size();
  Decomposition out;
  out.period = period;
  out.trend = centered_moving_average(observed, period, out.trend_begin, out.trend_end);

  std::vector<double> phase_sum(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t t = out.trend_begin; t < out.trend_end; ++t) {
    phase_sum[t % period] += observed[t] - out.trend[t];
    ++phase_count[t % period];
  }
  out.profile.resize(period);
  double centre = 0.0;
  for (std::size_t k = 0; k < period; ++k) {
    out.profile[k] = phase_sum[k] / static_cast<double>(phase_count[k]);
    centre += out.profile[k];
  }
  centre /= static_cast<double>(period);
  for (double& v : out.profile) v -= centre;

  out.seasonal.resize(n);
  out.residual.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 0; t < n; ++t) {
    out.seasonal[t] = out.profile[t % period];
    if (out.trend_defined(t)) out.residual[t] = observed[t] - out.trend[t] - out.seasonal[t];
  }
  return out;
}

inline Decomposition decompose(const TrafficSeries& series, std::size_t period) {
  return decompose(series.values(), period);
}

}  // namespace trafficlens::timeseries
