#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cgeo {

enum class Errc {
  InvalidArgument,
  // exprlang
  SyntaxError,
  UnknownIdentifier,
  VariableOutOfRange,
  EvalDomainError,
  // metricfield
  NotPositiveDefinite,
  DomainError,
  NonPositiveFactor,
  ConstraintViolation,
  // flow
  StepFailure,
  MaxStepsExceeded,
  // expmap
  ZeroVector,
  DegenerateDirection,
  ResolutionTooCoarse,
  NoExitWithinTrace,
  Unsupported,
  // spiral
  OutOfSafeRadius,
  MeshTooCoarse,
};

std::string_view errc_name(Errc code);

// Every library failure is reported through this exception; `code()` says
// which documented error condition occurred.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& what)
      : Error(Errc::SyntaxError,
              what + " at byte " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace cgeo
