#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recur {

enum class ErrorCode {
  // diary_io
  UnknownStatusChar,
  NonContiguousDays,
  DuplicateSubjectDay,
  BadTreatmentCode,
  MalformedRecord,
  EmptySeries,
  EmptyDataset,
  IoFailure,
  // model_core
  NonPositiveBeta,
  NonPositiveDuration,
  UnassignedLatent,
  ZeroProbabilityTransition,
  InvalidParams,
  DegenerateDataset,
  // sampler
  AllZeroMass,
  TruncationFailure,
  ChainDiverged,
  TooFewDraws,
  InvalidConfig,
  // prediction
  InvalidStart,
  HorizonTooShort,
  ConditioningFailure,
  // cli
  EmptyDraws,
  MalformedDraws,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` carries the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace recur
