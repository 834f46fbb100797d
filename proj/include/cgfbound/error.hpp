#pragma once

#include <stdexcept>
#include <string>

namespace cgfbound {

enum class ErrorCode {
  domain,
  non_monotone,
  no_finite_bound,
  correction_divergent,
  config,
  io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::non_monotone: return "non_monotone";
    case ErrorCode::no_finite_bound: return "no_finite_bound";
    case ErrorCode::correction_divergent: return "correction_divergent";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Library exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace cgfbound
