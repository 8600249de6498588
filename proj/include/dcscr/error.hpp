#pragma once

#include <stdexcept>
#include <string>

namespace dcscr {

enum class ErrorCode {
  DimensionMismatch,
  NotSymmetric,
  NotPositiveDefinite,
  SingularKKT,
  EmptySet,
  NonFinite,
  NumericalFailure,
  ShapeNotFactorable,
  InvalidLabel,
  InvalidConfig,
  InsufficientClasses,
  InsufficientSets,
  ParseError,
  DuplicateSetId,
  EmptyGallery,
  EmptyInput,
  DegenerateLabels,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// True for failures that originate in the numerics rather than in the inputs.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dcscr
