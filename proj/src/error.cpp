#include "rdsopt/error.hpp"

namespace rdsopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::BaseMismatch: return "BaseMismatch";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::UnknownProblem: return "UnknownProblem";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidBaseline: return "InvalidBaseline";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace rdsopt
