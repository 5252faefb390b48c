#include "tam/error.hpp"

namespace tam {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::AllInfinite: return "AllInfinite";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonDifferentiableStrategy: return "NonDifferentiableStrategy";
    case ErrorCode::TooManyClasses: return "TooManyClasses";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace tam
