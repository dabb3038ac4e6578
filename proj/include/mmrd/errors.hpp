#pragma once

#include <stdexcept>
#include <string>

namespace mmrd {

enum class ErrorKind {
  InvalidInput,
  RankDeficient,
  NoConvergence,
  NotPositiveDefinite,
  SingularInformation,
  DegenerateComplement,
  InfeasibleRounding,
  ScaleCollapse,
  DegenerateDenominator,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` says which contract failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Input errors are the caller's fault; everything else is a numerical failure.
  bool is_numerical() const noexcept { return kind_ != ErrorKind::InvalidInput; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularInformation: return "SingularInformation";
    case ErrorKind::DegenerateComplement: return "DegenerateComplement";
    case ErrorKind::InfeasibleRounding: return "InfeasibleRounding";
    case ErrorKind::ScaleCollapse: return "ScaleCollapse";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidInput, what);
}

}  // namespace mmrd
