#pragma once

#include <stdexcept>
#include <string>

namespace hicontour {

enum class ErrorCode {
  InvalidArgument,
  EmptyMask,
  DegenerateCloud,
  InvariantViolated,
  Io,
  Format,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported with this type; `code()` distinguishes them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hicontour
