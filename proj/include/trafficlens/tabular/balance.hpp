#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/random.hpp"

namespace trafficlens::tabular {

enum class BalanceStrategy { kDownsample, kOversample };

// Row indices of a class-balanced resample.
//
// Downsampling keeps a seeded subset (without replacement) of every class
// at the minority count. Oversampling keeps every row and tops each class
// up to the majority count with seeded draws (with replacement) from that
// class. The result is sorted ascending, so repeated rows are adjacent.
inline std::vector<std::size_t> balance_indices(std::span<const int> labels, int num_classes,
                                                BalanceStrategy strategy, std::uint64_t seed) {
  require(num_classes >= 2, ErrorKind::kConfig, "balancing needs at least 2 classes");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorKind::kLabel, "label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t lo = labels.size();
  std::size_t hi = 0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    require(!members[k].empty(), ErrorKind::kDegenerate,
            "class " + std::to_string(k) + " has no samples to balance");
    lo = std::min(lo, members[k].size());
    hi = std::max(hi, members[k].size());
  }

  Rng rng(seed);
  std::vector<std::size_t> out;
  for (auto& m : members) {
    if (strategy == BalanceStrategy::kDownsample) {
      for (std::size_t i = 0; i < lo; ++i) std::swap(m[i], m[i + rng.index(m.size() - i)]);
      out.insert(out.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(lo));
    } else {
      out.insert(out.end(), m.begin(), m.end());
      for (std::size_t i = m.size(); i < hi; ++i) out.push_back(m[rng.index(m.size())]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::pair<Matrix, std::vector<int>> balance_classes(const Matrix& X, std::span<const int> labels,
                                                           int num_classes, BalanceStrategy strategy,
                                                           std::uint64_t seed) {
  require(X.rows() == labels.size(), ErrorKind::kShape, "label count does not match row count");
  const auto idx = balance_indices(labels, num_classes, strategy, seed);
  return {X.select_rows(idx), select(labels, std::span<const std::size_t>(idx))};
}

}  // namespace trafficlens::tabular
