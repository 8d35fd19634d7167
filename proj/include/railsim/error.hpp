#pragma once

#include <stdexcept>
#include <string>

namespace railsim {

enum class ErrorCode {
  kParse = 1,
  kDanglingReference,
  kInvariant,
  kInvalidArgument,
  kIo,
  kIncompatible,
  kNumeric,
};

// All recoverable failures inside the C++ core are reported through this type.
// The C API maps `code()` onto rs_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace railsim
