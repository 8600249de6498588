#include "dcscr/error.hpp"

namespace dcscr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularKKT: return "SingularKKT";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::ShapeNotFactorable: return "ShapeNotFactorable";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::InsufficientSets: return "InsufficientSets";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateSetId: return "DuplicateSetId";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotSymmetric:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::SingularKKT:
    case ErrorCode::NonFinite:
    case ErrorCode::NumericalFailure:
      return true;
    default:
      return false;
  }
}

}  // namespace dcscr
