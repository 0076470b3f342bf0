#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/io/csv.hpp"

namespace trafficlens {

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

enum class Severity : int { kLow = 0, kMedium = 1, kHigh = 2 };
inline constexpr int kNumSeverity = 3;
inline constexpr std::array<std::string_view, kNumSeverity> kSeverityNames = {"Low", "Medium",
                                                                              "High"};

inline std::string_view to_string(Severity s) { return kSeverityNames[static_cast<int>(s)]; }

inline std::optional<Severity> parse_severity(std::string_view text) {
  for (int i = 0; i < kNumSeverity; ++i) {
    if (kSeverityNames[i] == text) return static_cast<Severity>(i);
  }
  return std::nullopt;
}

enum class ImageClass : int { kClear = 0, kCongested = 1, kConstruction = 2, kAccident = 3 };
inline constexpr int kNumImageClasses = 4;
inline constexpr std::array<std::string_view, kNumImageClasses> kImageClassNames = {
    "clear", "congested", "construction", "accident"};

inline std::string_view to_string(ImageClass c) { return kImageClassNames[static_cast<int>(c)]; }

inline std::optional<ImageClass> parse_image_class(std::string_view text) {
  for (int i = 0; i < kNumImageClasses; ++i) {
    if (kImageClassNames[i] == text) return static_cast<ImageClass>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Traffic series
// ---------------------------------------------------------------------------

// Hourly vehicle counts. Spacing is implicit: values[i] belongs to
// start_hour + i, so a gapped series cannot be represented.
class TrafficSeries {
 public:
  TrafficSeries(std::int64_t start_hour, std::vector<double> values)
      : start_hour_(start_hour), values_(std::move(values)) {
    require(!values_.empty(), ErrorKind::kLength, "traffic series must not be empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      require(std::isfinite(values_[i]) && values_[i] >= 0.0, ErrorKind::kValue,
              "traffic volume at index " + std::to_string(i) + " is negative or non-finite");
    }
  }

  std::int64_t start_hour() const noexcept { return start_hour_; }
  std::int64_t end_hour() const noexcept {
    return start_hour_ + static_cast<std::int64_t>(values_.size()) - 1;
  }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const TrafficSeries&) const = default;

 private:
  std::int64_t start_hour_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Accident records and their numeric encoding
// ---------------------------------------------------------------------------

// Missing values are std::monostate.
using FeatureValue = std::variant<std::monostate, double, std::string>;

struct AccidentRecord {
  std::map<std::string, FeatureValue> features;
  Severity severity = Severity::kLow;

  bool operator==(const AccidentRecord&) const = default;
};

inline std::vector<int> labels_of(std::span<const AccidentRecord> records) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(static_cast<int>(r.severity));
  return labels;
}

enum class ColumnKind { kNumeric, kOneHot };

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::string source;
  std::string category;  // empty for numeric columns

  bool operator==(const ColumnInfo&) const = default;
};

struct FeatureMatrix {
  Matrix values;
  std::vector<ColumnInfo> columns;
};

inline constexpr std::string_view kUnknownCategory = "unknown";

// Frozen per-feature encoding, learned from training records only.
struct FeatureEncoding {
  std::string name;
  bool categorical = false;
  std::vector<std::string> categories;  // sorted; categorical only
  double mean = 0.0;                    // numeric only
  double scale = 1.0;
  double median = 0.0;

  bool operator==(const FeatureEncoding&) const = default;
};

class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  explicit FeatureEncoder(std::vector<FeatureEncoding> features) : features_(std::move(features)) {
    std::sort(features_.begin(), features_.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
  }

  static FeatureEncoder fit(std::span<const AccidentRecord> records) {
    require(!records.empty(), ErrorKind::kShape, "cannot fit an encoder on zero records");
    check_schema(records);

    std::vector<FeatureEncoding> features;
    for (const auto& [name, unused] : records.front().features) {
      FeatureEncoding enc;
      enc.name = name;
      bool has_missing = false;
      std::vector<double> numbers;
      for (const auto& r : records) {
        const auto& v = r.features.at(name);
        if (std::holds_alternative<std::string>(v)) enc.categorical = true;
        if (std::holds_alternative<std::monostate>(v)) has_missing = true;
        if (const double* d = std::get_if<double>(&v)) {
          require(std::isfinite(*d), ErrorKind::kValue,
                  "feature '" + name + "' holds a non-finite value");
          numbers.push_back(*d);
        }
      }
      if (enc.categorical) {
        std::set<std::string> tokens;
        for (const auto& r : records) {
          const auto& v = r.features.at(name);
          if (!std::holds_alternative<std::monostate>(v)) tokens.insert(token_of(v));
        }
        if (has_missing) tokens.insert(std::string(kUnknownCategory));
        enc.categories.assign(tokens.begin(), tokens.end());
      } else if (!numbers.empty()) {
        double sum = 0.0;
        for (double x : numbers) sum += x;
        enc.mean = sum / static_cast<double>(numbers.size());
        double ss = 0.0;
        for (double x : numbers) ss += (x - enc.mean) * (x - enc.mean);
        const double sd = std::sqrt(ss / static_cast<double>(numbers.size()));
        enc.scale = sd > 0.0 ? sd : 1.0;
        std::sort(numbers.begin(), numbers.end());
        const std::size_t m = numbers.size();
        enc.median = m % 2 ? numbers[m / 2] : 0.5 * (numbers[m / 2 - 1] + numbers[m / 2]);
      }
      features.push_back(std::move(enc));
    }
    return FeatureEncoder(std::move(features));
  }

  const std::vector<FeatureEncoding>& features() const noexcept { return features_; }

  // Lexicographic by feature name, then by category token.
  std::vector<ColumnInfo> columns() const {
    std::vector<ColumnInfo> cols;
    for (const auto& f : features_) {
      if (f.categorical) {
        for (const auto& c : f.categories) {
          cols.push_back({f.name + "=" + c, ColumnKind::kOneHot, f.name, c});
        }
      } else {
        cols.push_back({f.name, ColumnKind::kNumeric, f.name, ""});
      }
    }
    return cols;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (const auto& f : features_) names.push_back(f.name);
    return names;
  }

  // Canonical text describing the encoding, used for fingerprints.
  std::string schema_string() const {
    std::string out;
    for (const auto& f : features_) {
      out += f.name;
      out += f.categorical ? ":cat[" : ":num[";
      for (const auto& c : f.categories) {
        out += c;
        out += '|';
      }
      out += "];";
    }
    return out;
  }

  FeatureMatrix transform(std::span<const AccidentRecord> records) const {
    FeatureMatrix fm;
    fm.columns = columns();
    fm.values = Matrix(records.size(), fm.columns.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto& rec = records[r];
      require(rec.features.size() == features_.size(), ErrorKind::kSchema,
              "record " + std::to_string(r) + " has " + std::to_string(rec.features.size()) +
                  " features, encoder expects " + std::to_string(features_.size()));
      std::size_t col = 0;
      for (const auto& f : features_) {
        const auto it = rec.features.find(f.name);
        require(it != rec.features.end(), ErrorKind::kSchema,
                "record " + std::to_string(r) + " lacks feature '" + f.name + "'");
        const auto& v = it->second;
        if (f.categorical) {
          const std::string token = std::holds_alternative<std::monostate>(v)
                                        ? std::string(kUnknownCategory)
                                        : token_of(v);
          auto pos = std::lower_bound(f.categories.begin(), f.categories.end(), token);
          if (pos == f.categories.end() || *pos != token) {
            pos = std::lower_bound(f.categories.begin(), f.categories.end(),
                                   std::string(kUnknownCategory));
            require(pos != f.categories.end() && *pos == kUnknownCategory, ErrorKind::kValue,
                    "feature '" + f.name + "' has unseen category '" + token + "'");
          }
          fm.values(r, col + static_cast<std::size_t>(pos - f.categories.begin())) = 1.0;
          col += f.categories.size();
        } else {
          double x = f.median;
          if (const double* d = std::get_if<double>(&v)) {
            x = *d;
          } else if (const auto* s = std::get_if<std::string>(&v)) {
            const auto parsed = csv::to_number(*s);
            require(parsed.has_value(), ErrorKind::kValue,
                    "feature '" + f.name + "' expects a number, got '" + *s + "'");
            x = *parsed;
          }
          require(std::isfinite(x), ErrorKind::kValue,
                  "feature '" + f.name + "' holds a non-finite value");
          fm.values(r, col++) = (x - f.mean) / f.scale;
        }
      }
    }
    return fm;
  }

  // Inverse of transform: tokens by one-hot argmax, numerics un-standardized.
  std::vector<AccidentRecord> decode(const Matrix& values, std::span<const int> labels) const {
    require(values.rows() == labels.size(), ErrorKind::kShape, "label count mismatch");
    std::vector<AccidentRecord> out(values.rows());
    for (std::size_t r = 0; r < values.rows(); ++r) {
      std::size_t col = 0;
      for (const auto& f : features_) {
        if (f.categorical) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < f.categories.size(); ++k) {
            if (values(r, col + k) > values(r, col + best)) best = k;
          }
          out[r].features[f.name] = f.categories[best];
          col += f.categories.size();
        } else {
          out[r].features[f.name] = values(r, col++) * f.scale + f.mean;
        }
      }
      out[r].severity = static_cast<Severity>(labels[r]);
    }
    return out;
  }

  bool operator==(const FeatureEncoder&) const = default;

  static std::string token_of(const FeatureValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const double* d = std::get_if<double>(&v)) return csv::format_number(*d);
    return std::string(kUnknownCategory);
  }

 private:
  static void check_schema(std::span<const AccidentRecord> records) {
    const auto& first = records.front().features;
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& f = records[i].features;
      bool same = f.size() == first.size();
      if (same) {
        auto a = first.begin();
        for (auto b = f.begin(); b != f.end(); ++a, ++b) {
          if (a->first != b->first) {
            same = false;
            break;
          }
        }
      }
      require(same, ErrorKind::kSchema,
              "record " + std::to_string(i) + " has a different feature set than record 0");
    }
  }

  std::vector<FeatureEncoding> features_;
};

inline std::pair<FeatureMatrix, std::vector<int>> encode_features(
    std::span<const AccidentRecord> records) {
  require(!records.empty(), ErrorKind::kShape, "cannot encode zero records");
  const auto encoder = FeatureEncoder::fit(records);
  return {encoder.transform(records), labels_of(records)};
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

// H x W x C tensor in [0,1], channels innermost.
struct ImageSample {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;
  ImageClass label = ImageClass::kClear;

  double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }

  bool operator==(const ImageSample&) const = default;
};

inline void validate(const ImageSample& img) {
  require(img.height >= 8 && img.width >= 8, ErrorKind::kShape, "images must be at least 8x8");
  require(img.channels == 1 || img.channels == 3, ErrorKind::kShape,
          "images must have 1 or 3 channels");
  require(img.pixels.size() == img.height * img.width * img.channels, ErrorKind::kShape,
          "pixel buffer does not match image shape");
  for (double p : img.pixels) {
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, ErrorKind::kValue,
            "pixel values must lie in [0,1]");
  }
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  bool stratify = false;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

namespace detail {
inline std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}
}  // namespace detail

// Both partitions come back sorted ascending. Stratified mode splits each
// class separately (classes visited in ascending label order).
inline SplitIndices split(std::span<const int> labels, const SplitSpec& spec) {
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, ErrorKind::kConfig,
          "train fraction must lie in (0,1)");
  const std::size_t n = labels.size();
  require(n >= 2, ErrorKind::kLength, "split needs at least 2 samples");

  Rng rng(spec.seed);
  SplitIndices out;
  if (!spec.stratify) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t k = std::clamp<std::size_t>(detail::train_count(n, spec.train_fraction), 1,
                                                  n - 1);
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    for (auto& [label, members] : by_class) {
      rng.shuffle(members);
      const std::size_t k = detail::train_count(members.size(), spec.train_fraction);
      out.train.insert(out.train.end(), members.begin(),
                       members.begin() + static_cast<std::ptrdiff_t>(k));
      out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(k),
                      members.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline SplitIndices split(std::size_t n, const SplitSpec& spec) {
  std::vector<int> labels(n, 0);
  SplitSpec plain = spec;
  plain.stratify = false;
  return split(labels, plain);
}

}  // namespace trafficlens
