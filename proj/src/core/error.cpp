#include "core/error.hpp"

namespace qut {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroCoupling: return "ZeroCoupling";
    case ErrorCode::BlockMismatch: return "BlockMismatch";
    case ErrorCode::BadIndices: return "BadIndices";
    case ErrorCode::EmptyBlock: return "EmptyBlock";
    case ErrorCode::DegreeOverflow: return "DegreeOverflow";
    case ErrorCode::ZeroAmplitude: return "ZeroAmplitude";
    case ErrorCode::NegativeDos: return "NegativeDos";
    case ErrorCode::NegativeSquare: return "NegativeSquare";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace qut
