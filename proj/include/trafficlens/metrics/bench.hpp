#pragma once

#include <sched.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/io/csv.hpp"

namespace trafficlens::metrics {

inline constexpr std::size_t kWarmupCalls = 10;
inline constexpr std::size_t kMinRepetitions = 30;

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
  std::size_t repetitions = 0;
  std::string hardware;
};

inline std::string hardware_note() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads, timed on 1";
}

// Linear interpolation between closest ranks.
inline double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::kShape, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace detail {

class PinToOneCpu {
 public:
  PinToOneCpu() {
    ok_ = sched_getaffinity(0, sizeof(saved_), &saved_) == 0;
    const int cpu = sched_getcpu();
    if (ok_ && cpu >= 0) {
      cpu_set_t one;
      CPU_ZERO(&one);
      CPU_SET(cpu, &one);
      sched_setaffinity(0, sizeof(one), &one);
    }
  }
  ~PinToOneCpu() {
    if (ok_) sched_setaffinity(0, sizeof(saved_), &saved_);
  }
  PinToOneCpu(const PinToOneCpu&) = delete;
  PinToOneCpu& operator=(const PinToOneCpu&) = delete;

 private:
  cpu_set_t saved_{};
  bool ok_ = false;
};

}  // namespace detail

// predict(i) runs one single-sample inference on sample i % n_samples.
inline LatencyStats bench_latency(const std::function<void(std::size_t)>& predict, std::size_t n_samples,
                                  std::size_t repetitions) {
  require(repetitions >= kMinRepetitions, ErrorKind::kConfig,
          "latency benchmark needs at least " + std::to_string(kMinRepetitions) + " repetitions");
  require(n_samples > 0, ErrorKind::kShape, "latency benchmark needs at least one sample");
  detail::PinToOneCpu pin;
  for (std::size_t i = 0; i < kWarmupCalls; ++i) predict(i % n_samples);
  std::vector<double> ms(repetitions);
  for (std::size_t i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    predict(i % n_samples);
    const auto t1 = std::chrono::steady_clock::now();
    ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  LatencyStats s;
  s.repetitions = repetitions;
  for (double v : ms) s.mean_ms += v / static_cast<double>(repetitions);
  s.p50_ms = percentile(ms, 0.50);
  s.p95_ms = percentile(ms, 0.95);
  s.max_ms = *std::max_element(ms.begin(), ms.end());
  s.hardware = hardware_note();
  return s;
}

struct ScalingRow {
  std::size_t size = 0;
  double train_seconds = 0.0;
};

// fit(size, seed) generates seeded data of the given size and trains on it.
inline std::vector<ScalingRow> bench_scaling(const std::function<void(std::size_t, std::uint64_t)>& fit,
                                             const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  require(!sizes.empty(), ErrorKind::kConfig, "scaling benchmark needs at least one size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    require(sizes[i] > sizes[i - 1], ErrorKind::kConfig, "scaling sizes must be strictly ascending");
  }
  std::vector<ScalingRow> rows;
  for (auto n : sizes) {
    const auto t0 = std::chrono::steady_clock::now();
    fit(n, seed);
    const auto t1 = std::chrono::steady_clock::now();
    rows.push_back({n, std::chrono::duration<double>(t1 - t0).count()});
  }
  return rows;
}

inline std::string scaling_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"size", "train_seconds"});
  for (const auto& r : rows) w.row({std::to_string(r.size), csv::format_number(r.train_seconds)});
  return os.str();
}

}  // namespace trafficlens::metrics
