#include "mmjsq/error.hpp"

namespace mmjsq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::ZeroArrivalVector: return "ZeroArrivalVector";
    case ErrorCode::NonpositiveS: return "NonpositiveS";
    case ErrorCode::UnstableModel: return "UnstableModel";
    case ErrorCode::OverflowGuard: return "OverflowGuard";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::UnstableInput: return "UnstableInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace mmjsq
