#include "mscap/error.hpp"

namespace mscap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kSeparationTooSmall: return "SEPARATION_TOO_SMALL";
    case ErrorCode::kEmptyK: return "EMPTY_K";
    case ErrorCode::kDomainMismatch: return "DOMAIN_MISMATCH";
    case ErrorCode::kStencilOffGrid: return "STENCIL_OFF_GRID";
    case ErrorCode::kNoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::kInfeasible: return "INFEASIBLE";
    case ErrorCode::kEmptyFamily: return "EMPTY_FAMILY";
    case ErrorCode::kNonmonotoneSequence: return "NONMONOTONE_SEQUENCE";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kConstraintError: return "CONSTRAINT_ERROR";
    case ErrorCode::kEvalGuard: return "EVAL_GUARD";
    case ErrorCode::kIoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kSeparationTooSmall:
    case ErrorCode::kEmptyK:
    case ErrorCode::kInfeasible:
    case ErrorCode::kParseError:
    case ErrorCode::kConstraintError:
    case ErrorCode::kEvalGuard:
    case ErrorCode::kIoError:
      return 2;
    case ErrorCode::kNoConvergence:
      return 3;
    case ErrorCode::kEmptyFamily:
    case ErrorCode::kNonmonotoneSequence:
      return 4;
    case ErrorCode::kDomainMismatch:
    case ErrorCode::kStencilOffGrid:
      return 1;
  }
  return 1;
}

}  // namespace mscap
