#include "thermident/error.hpp"

namespace thermident {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchema: return "E_SCHEMA";
    case ErrorCode::kInvalid: return "E_INVALID";
    case ErrorCode::kDimension: return "E_DIMENSION";
    case ErrorCode::kUnstable: return "E_UNSTABLE";
    case ErrorCode::kNumeric: return "E_NUMERIC";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kConfig: return "E_CONFIG";
  }
  return "E_UNKNOWN";
}

}  // namespace thermident
