#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "trafficlens/core/random.hpp"
#include "trafficlens/datamodel.hpp"
#include "trafficlens/io/csv.hpp"

namespace trafficlens::datasynth {

struct TrafficGenSpec {
  std::size_t n = 10080;
  double base = 100.0;
  double slope = 0.001;
  double daily_amplitude = 30.0;   // period 24
  double weekly_amplitude = 10.0;  // period 168
  double sigma = 5.0;
  std::uint64_t seed = 42;
  std::int64_t start_hour = 0;
};

// The noise-free part of the generator at hour offset t.
inline double traffic_signal(const TrafficGenSpec& spec, std::size_t t) {
  const double x = static_cast<double>(t);
  return spec.base + spec.slope * x + spec.daily_amplitude * std::sin(2.0 * std::numbers::pi * x / 24.0) +
         spec.weekly_amplitude * std::sin(2.0 * std::numbers::pi * x / 168.0);
}

inline TrafficSeries gen_traffic(const TrafficGenSpec& spec) {
  require(spec.n >= 1, ErrorKind::kConfig, "traffic series length must be at least 1");
  require(spec.daily_amplitude >= 0 && spec.weekly_amplitude >= 0 && spec.sigma >= 0, ErrorKind::kConfig,
          "amplitudes and noise level must be non-negative");
  Rng rng(spec.seed);
  std::vector<double> values(spec.n);
  for (std::size_t t = 0; t < spec.n; ++t) {
    const double noise = spec.sigma > 0.0 ? rng.normal(0.0, spec.sigma) : 0.0;
    values[t] = std::max(0.0, traffic_signal(spec, t) + noise);
  }
  return TrafficSeries(spec.start_hour, std::move(values));
}

inline std::string traffic_csv(const TrafficSeries& series) {
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"timestamp_hour", "volume"});
  for (std::size_t i = 0; i < series.size(); ++i) {
    w.row({std::to_string(series.start_hour() + static_cast<std::int64_t>(i)),
           csv::format_number(series.values()[i])});
  }
  return os.str();
}

inline void write_traffic_csv(const TrafficSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kParse, "cannot write " + path);
  out << traffic_csv(series);
}

inline TrafficSeries parse_traffic_csv(std::string_view text, const std::string& source) {
  const auto table = csv::parse(text, source);
  require(table.header.size() == 2 && table.header[0] == "timestamp_hour" && table.header[1] == "volume",
          ErrorKind::kSchema, source + ": expected header timestamp_hour,volume");
  require(!table.rows.empty(), ErrorKind::kLength, source + ": no data rows");
  std::int64_t start = 0;
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = source + ":" + std::to_string(row.line);
    const auto ts = csv::to_number(row.fields[0]);
    require(ts && std::floor(*ts) == *ts, ErrorKind::kParse, where + ": timestamp_hour is not an integer");
    const auto v = csv::to_number(row.fields[1]);
    require(v.has_value(), ErrorKind::kParse, where + ": volume '" + row.fields[1] + "' is not a number");
    require(std::isfinite(*v) && *v >= 0.0, ErrorKind::kValue, where + ": volume must be non-negative");
    const auto hour = static_cast<std::int64_t>(*ts);
    if (i == 0) {
      start = hour;
    } else {
      const std::int64_t expected = start + static_cast<std::int64_t>(i);
      require(hour == expected, ErrorKind::kGap,
              where + ": expected hour " + std::to_string(expected) + ", got " + std::to_string(hour));
    }
    values.push_back(*v);
  }
  return TrafficSeries(start, std::move(values));
}

inline TrafficSeries load_traffic_csv(const std::string& path) {
  return parse_traffic_csv(csv::read_file(path), path);
}

}  // namespace trafficlens::datasynth
