#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trafficlens {

// Failure categories. The CLI maps them onto exit codes:
// config -> 1, data problems -> 2, numeric failures -> 3.
enum class ErrorKind {
  kConfig,
  kShape,
  kValue,
  kSchema,
  kParse,
  kLength,
  kLabel,
  kDegenerate,
  kGap,
  kChecksum,
  kConvergence,
  kDivergence,
  kStability,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kValue: return "value";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kLength: return "length";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kGap: return "gap";
    case ErrorKind::kChecksum: return "checksum";
    case ErrorKind::kConvergence: return "convergence";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kStability: return "stability";
  }
  return "unknown";
}

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kConvergence:
    case ErrorKind::kDivergence:
    case ErrorKind::kStability:
      return 3;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace trafficlens
