#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eqstate {

// Domain error categories. The CLI prints the name and exits with status 1.
enum class ErrorKind {
  AtCriticalOrBoundary,
  NotInImage,
  OutOfDomain,
  OrbitTruncated,
  NotMarkovCompatible,
  ToleranceFailure,
  UnknownGenerator,
  OutOfRange,
  NoRoot,
  DivergentEntropy,
  InfiniteMeanReturn,
  OrbitHitsCritical,
  NoFiniteRoot,
  NoNeutralPoints,
  OrbitEscaped,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace eqstate
