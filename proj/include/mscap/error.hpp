#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mscap {

enum class ErrorCode {
  kInvalidArgument,
  kSeparationTooSmall,
  kEmptyK,
  kDomainMismatch,
  kStencilOffGrid,
  kNoConvergence,
  kInfeasible,
  kEmptyFamily,
  kNonmonotoneSequence,
  kParseError,
  kConstraintError,
  kEvalGuard,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Process exit code used by the command-line front end for each error class.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mscap
