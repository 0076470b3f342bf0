#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "trafficlens/core/matrix.hpp"

namespace trafficlens {

// In-place softmax, shifted by the max for stability.
inline void softmax_inplace(std::span<double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : v) x /= total;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Row-wise argmax of a probability matrix.
inline std::vector<int> argmax_rows(const Matrix& proba) {
  std::vector<int> out(proba.rows());
  for (std::size_t r = 0; r < proba.rows(); ++r) out[r] = static_cast<int>(argmax(proba.row(r)));
  return out;
}

}  // namespace trafficlens
