#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beamsense {

enum class ErrorKind {
  kInvalidArgument,
  kSpawnFailure,
  kDegenerateGeometry,
  kNumericFailure,
  kConfigError,
  kPolicyFailure,
  kIoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kSpawnFailure: return "spawn-failure";
    case ErrorKind::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::kNumericFailure: return "numeric-failure";
    case ErrorKind::kConfigError: return "config-error";
    case ErrorKind::kPolicyFailure: return "policy-failure";
    case ErrorKind::kIoError: return "io-error";
  }
  return "unknown";
}

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const char* what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace beamsense
