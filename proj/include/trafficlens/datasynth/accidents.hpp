#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trafficlens/core/numeric.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/datamodel.hpp"
#include "trafficlens/io/csv.hpp"

namespace trafficlens::datasynth {

// Severity model
// --------------
// Only the five informative columns enter the severity score
//
//   z = w_weather[weather] + w_road[road_type] - 0.04 * (driver_age - 16)
//       + 0.5 * [hour_of_day < 5 or hour_of_day >= 22]
//       + 0.01 * (speed_limit - 25)
//       + (checkerboard ? 1.5 * s : 0)
//
// where s = +1 when (driver_age < 45) differs from (hour_of_day >= 12) and -1
// otherwise. Score quantiles are estimated once from a fixed Monte Carlo
// sample. Around each class boundary a band of scores is excluded: rows
// falling inside are redrawn. The band around the Low/Medium boundary spans
// the quantiles (q1 - c*p_low, q1 + c*p_med/2), the Medium/High one
// (q2 - c*p_med/2, q2 + c*p_high), so every class loses the fraction c of
// its mass and the class proportions stay at the priors. Class logits are
// ordinal, (0, b(z - t1), b(z - t1) + b(z - t2)) with t1, t2 the band
// centres and b large enough that the softmax draw is all but deterministic.
namespace accident_model {

inline constexpr std::array<std::string_view, 5> kWeather = {"normal", "rain", "fog", "snow", "storm"};
inline constexpr std::array<double, 5> kWeatherProb = {0.60, 0.18, 0.08, 0.08, 0.06};
inline constexpr std::array<double, 5> kWeatherWeight = {0.0, 1.0, 1.5, 2.0, 2.5};

inline constexpr std::array<std::string_view, 4> kRoad = {"urban", "rural", "highway", "residential"};
inline constexpr std::array<double, 4> kRoadProb = {0.35, 0.30, 0.20, 0.15};
inline constexpr std::array<double, 4> kRoadWeight = {0.0, 1.0, 1.8, 0.4};

inline constexpr double kAgeMin = 16, kAgeMax = 90;
inline constexpr double kAgeWeight = -0.04;
inline constexpr double kNightWeight = 0.5;
inline constexpr std::array<double, 6> kSpeedLimits = {25, 35, 45, 55, 65, 75};
inline constexpr double kSpeedWeight = 0.01;
inline constexpr double kCheckerWeight = 1.5;
inline constexpr double kCheckerAge = 45;
inline constexpr double kCheckerHour = 12;

inline constexpr double kBandFraction = 0.4;
inline constexpr double kLogitAtBandEdge = 25.0;
inline constexpr std::size_t kCalibrationDraws = 200000;
inline constexpr std::uint64_t kCalibrationSeed = 20240601;

}  // namespace accident_model

struct AccidentGenSpec {
  std::size_t n = 14526;
  std::array<double, 3> priors = {0.29, 0.52, 0.19};
  std::uint64_t seed = 42;
  bool checkerboard = false;
};

// Informative columns first, then the 37 nuisance columns.
inline const std::vector<std::string>& informative_columns() {
  static const std::vector<std::string> cols = {"weather", "road_type", "driver_age", "hour_of_day",
                                                "speed_limit"};
  return cols;
}

namespace detail {

struct NuisanceColumn {
  std::string_view name;
  int kind;  // 0 normal, 1 uniform, 2 count, 3 categorical
  double a, b;
  int levels;
  double missing;
};

inline const std::vector<NuisanceColumn>& nuisance() {
  static const std::vector<NuisanceColumn> cols = {
      {"visibility_km", 1, 0.5, 20, 0, 0.0},
      {"temperature_c", 0, 12, 9, 0, 0.0},
      {"humidity_pct", 1, 20, 100, 0, 0.0},
      {"wind_speed_kmh", 0, 15, 6, 0, 0.02},
      {"precipitation_mm", 1, 0, 30, 0, 0.0},
      {"vehicle_count", 2, 1, 4, 0, 0.0},
      {"passenger_count", 2, 0, 5, 0, 0.0},
      {"lane_count", 2, 1, 6, 0, 0.0},
      {"traffic_density", 0, 50, 15, 0, 0.0},
      {"distance_to_junction_m", 1, 0, 500, 0, 0.0},
      {"latitude", 1, 51.3, 51.7, 0, 0.0},
      {"longitude", 1, -0.5, 0.3, 0, 0.0},
      {"elevation_m", 0, 60, 25, 0, 0.0},
      {"road_curvature", 0, 0, 1, 0, 0.0},
      {"vehicle_age_years", 2, 0, 20, 0, 0.02},
      {"engine_cc", 0, 1600, 400, 0, 0.0},
      {"response_time_min", 0, 12, 4, 0, 0.0},
      {"days_since_inspection", 2, 0, 365, 0, 0.0},
      {"pressure_hpa", 0, 1013, 8, 0, 0.0},
      {"dew_point_c", 0, 6, 5, 0, 0.0},
      {"cloud_cover_pct", 1, 0, 100, 0, 0.0},
      {"street_lights", 2, 0, 8, 0, 0.0},
      {"signal_count", 2, 0, 3, 0, 0.0},
      {"population_density", 0, 4000, 1500, 0, 0.0},
      {"day_of_year", 2, 1, 365, 0, 0.0},
      {"light_conditions", 3, 0, 0, 3, 0.0},
      {"junction_type", 3, 0, 0, 5, 0.0},
      {"surface_material", 3, 0, 0, 3, 0.0},
      {"vehicle_type", 3, 0, 0, 5, 0.0},
      {"driver_gender", 3, 0, 0, 2, 0.02},
      {"day_of_week", 3, 0, 0, 7, 0.0},
      {"police_attended", 3, 0, 0, 2, 0.0},
      {"area_code", 3, 0, 0, 4, 0.0},
      {"carriageway_hazard", 3, 0, 0, 3, 0.0},
      {"special_conditions", 3, 0, 0, 3, 0.0},
      {"district", 3, 0, 0, 6, 0.0},
      {"vehicle_manoeuvre", 3, 0, 0, 4, 0.0},
  };
  return cols;
}

struct Informative {
  std::size_t weather;
  std::size_t road;
  double age;
  double hour;
  double speed;
};

inline Informative draw_informative(Rng& rng) {
  using namespace accident_model;
  Informative x;
  x.weather = rng.categorical(kWeatherProb);
  x.road = rng.categorical(kRoadProb);
  x.age = kAgeMin + static_cast<double>(rng.index(static_cast<std::size_t>(kAgeMax - kAgeMin) + 1));
  x.hour = static_cast<double>(rng.index(24));
  x.speed = kSpeedLimits[rng.index(kSpeedLimits.size())];
  return x;
}

inline double score(const Informative& x, bool checkerboard) {
  using namespace accident_model;
  double z = kWeatherWeight[x.weather] + kRoadWeight[x.road] + kAgeWeight * (x.age - kAgeMin) +
             kSpeedWeight * (x.speed - kSpeedLimits[0]);
  if (x.hour < 5 || x.hour >= 22) z += kNightWeight;
  if (checkerboard) z += ((x.age < kCheckerAge) != (x.hour >= kCheckerHour)) ? kCheckerWeight : -kCheckerWeight;
  return z;
}

struct Bands {
  double lo1, hi1, lo2, hi2;
  double t1() const { return 0.5 * (lo1 + hi1); }
  double t2() const { return 0.5 * (lo2 + hi2); }
  bool excluded(double z) const { return (z >= lo1 && z <= hi1) || (z >= lo2 && z <= hi2); }
  double sharpness() const {
    return accident_model::kLogitAtBandEdge / std::min(0.5 * (hi1 - lo1), 0.5 * (hi2 - lo2));
  }
};

inline Bands score_bands(const std::array<double, 3>& priors, bool checkerboard) {
  using namespace accident_model;
  Rng rng(kCalibrationSeed);
  std::vector<double> z(kCalibrationDraws);
  for (auto& v : z) v = score(draw_informative(rng), checkerboard);
  std::sort(z.begin(), z.end());
  auto quantile = [&](double q) {
    const auto i = std::min(z.size() - 1, static_cast<std::size_t>(q * static_cast<double>(z.size())));
    return z[i];
  };
  const double c = kBandFraction;
  const double q1 = priors[0], q2 = priors[0] + priors[1];
  Bands b{quantile(q1 - c * priors[0]), quantile(q1 + 0.5 * c * priors[1]), quantile(q2 - 0.5 * c * priors[1]),
          quantile(q2 + c * priors[2])};
  require(b.hi1 > b.lo1 && b.lo2 > b.hi1 && b.hi2 > b.lo2, ErrorKind::kConfig,
          "class priors leave no room between severity bands");
  return b;
}

}  // namespace detail

inline std::vector<std::string> accident_columns() {
  std::vector<std::string> cols = informative_columns();
  for (const auto& c : detail::nuisance()) cols.emplace_back(c.name);
  return cols;
}

inline std::vector<AccidentRecord> gen_accidents(const AccidentGenSpec& spec) {
  using namespace accident_model;
  double total = 0.0;
  for (double p : spec.priors) {
    require(p > 0.0, ErrorKind::kConfig, "class priors must be positive");
    total += p;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorKind::kConfig, "class priors must sum to 1");
  std::vector<AccidentRecord> out;
  if (spec.n == 0) return out;
  const auto bands = detail::score_bands(spec.priors, spec.checkerboard);
  const double sharpness = bands.sharpness();
  Rng rng(spec.seed);
  out.reserve(spec.n);
  while (out.size() < spec.n) {
    const auto x = detail::draw_informative(rng);
    const double z = detail::score(x, spec.checkerboard);
    // Nuisance values are drawn for every candidate so rejections do not
    // correlate them with the score.
    AccidentRecord rec;
    for (const auto& c : detail::nuisance()) {
      FeatureValue v;
      switch (c.kind) {
        case 0: v = rng.normal(c.a, c.b); break;
        case 1: v = rng.uniform(c.a, c.b); break;
        case 2: v = c.a + static_cast<double>(rng.index(static_cast<std::size_t>(c.b - c.a) + 1)); break;
        default: v = std::string(c.name) + "_" + std::to_string(rng.index(static_cast<std::size_t>(c.levels))); break;
      }
      if (c.missing > 0.0 && rng.uniform() < c.missing) v = std::monostate{};
      rec.features.emplace(std::string(c.name), std::move(v));
    }
    if (bands.excluded(z)) continue;
    std::array<double, 3> logits = {0.0, sharpness * (z - bands.t1()), 0.0};
    logits[2] = logits[1] + sharpness * (z - bands.t2());
    softmax_inplace(logits);
    rec.severity = static_cast<Severity>(rng.categorical(logits));
    rec.features.emplace("weather", std::string(kWeather[x.weather]));
    rec.features.emplace("road_type", std::string(kRoad[x.road]));
    rec.features.emplace("driver_age", x.age);
    rec.features.emplace("hour_of_day", x.hour);
    rec.features.emplace("speed_limit", x.speed);
    out.push_back(std::move(rec));
  }
  return out;
}

// CSV layout: feature columns in the order given, then `severity`.
inline std::string accidents_csv(const std::vector<AccidentRecord>& records,
                                 std::vector<std::string> columns = {}) {
  if (columns.empty()) {
    if (records.empty()) {
      columns = accident_columns();
    } else {
      for (const auto& [name, value] : records.front().features) columns.push_back(name);
      const auto known = accident_columns();
      if (std::is_permutation(columns.begin(), columns.end(), known.begin(), known.end())) columns = known;
    }
  }
  std::ostringstream os;
  csv::Writer w(os);
  auto header = columns;
  header.emplace_back("severity");
  w.row(header);
  std::vector<std::string> fields(header.size());
  for (const auto& r : records) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = r.features.find(columns[c]);
      require(it != r.features.end(), ErrorKind::kSchema, "record lacks column " + columns[c]);
      const auto& v = it->second;
      if (std::holds_alternative<double>(v)) {
        fields[c] = csv::format_number(std::get<double>(v));
      } else if (std::holds_alternative<std::string>(v)) {
        fields[c] = std::get<std::string>(v);
      } else {
        fields[c].clear();
      }
    }
    fields.back() = std::string(to_string(r.severity));
    w.row(fields);
  }
  return os.str();
}

inline void write_accidents_csv(const std::vector<AccidentRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kParse, "cannot write " + path);
  out << accidents_csv(records);
}

// Empty fields are missing; fields that parse as numbers become numbers.
inline std::vector<AccidentRecord> parse_accidents_csv(std::string_view text, const std::string& source) {
  const auto table = csv::parse(text, source);
  const auto sev = std::find(table.header.begin(), table.header.end(), "severity");
  require(sev != table.header.end(), ErrorKind::kSchema, source + ": missing 'severity' column");
  const auto sev_col = static_cast<std::size_t>(sev - table.header.begin());
  std::vector<std::string> seen;
  for (const auto& h : table.header) {
    require(!h.empty(), ErrorKind::kSchema, source + ": empty column name in header");
    require(std::find(seen.begin(), seen.end(), h) == seen.end(), ErrorKind::kSchema,
            source + ": duplicate column '" + h + "'");
    seen.push_back(h);
  }
  std::vector<AccidentRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string where = source + ":" + std::to_string(row.line);
    AccidentRecord rec;
    const auto label = parse_severity(row.fields[sev_col]);
    require(label.has_value(), ErrorKind::kLabel, where + ": unknown severity '" + row.fields[sev_col] + "'");
    rec.severity = *label;
    for (std::size_t c = 0; c < row.fields.size(); ++c) {
      if (c == sev_col) continue;
      const auto& f = row.fields[c];
      FeatureValue v;
      if (!f.empty()) {
        const auto num = csv::to_number(f);
        if (num && std::isfinite(*num)) {
          v = *num;
        } else {
          v = f;
        }
      }
      rec.features.emplace(table.header[c], std::move(v));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<AccidentRecord> load_accidents_csv(const std::string& path) {
  return parse_accidents_csv(csv::read_file(path), path);
}

}  // namespace trafficlens::datasynth
