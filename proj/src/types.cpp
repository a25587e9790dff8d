#include "recur/types.hpp"

#include "recur/error.hpp"

namespace recur {

std::string_view to_string(NonNClass c) {
  switch (c) {
    case NonNClass::S: return "S";
    case NonNClass::SB: return "SB";
    case NonNClass::B: return "B";
  }
  return "?";
}

std::optional<NonNClass> class_from_string(std::string_view s) {
  if (s == "S") return NonNClass::S;
  if (s == "SB" || s == "BS") return NonNClass::SB;
  if (s == "B") return NonNClass::B;
  return std::nullopt;
}

std::string_view to_string(Phase p) { return p == Phase::N ? "N" : "NonN"; }

std::string to_string(ClassSet set) {
  std::string out;
  for (NonNClass c : kAllClasses) {
    if (!set.contains(c)) continue;
    if (!out.empty()) out += '|';
    out += to_string(c);
  }
  return out;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownStatusChar: return "UnknownStatusChar";
    case ErrorCode::NonContiguousDays: return "NonContiguousDays";
    case ErrorCode::DuplicateSubjectDay: return "DuplicateSubjectDay";
    case ErrorCode::BadTreatmentCode: return "BadTreatmentCode";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NonPositiveBeta: return "NonPositiveBeta";
    case ErrorCode::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::UnassignedLatent: return "UnassignedLatent";
    case ErrorCode::ZeroProbabilityTransition: return "ZeroProbabilityTransition";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::AllZeroMass: return "AllZeroMass";
    case ErrorCode::TruncationFailure: return "TruncationFailure";
    case ErrorCode::ChainDiverged: return "ChainDiverged";
    case ErrorCode::TooFewDraws: return "TooFewDraws";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidStart: return "InvalidStart";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::ConditioningFailure: return "ConditioningFailure";
    case ErrorCode::EmptyDraws: return "EmptyDraws";
    case ErrorCode::MalformedDraws: return "MalformedDraws";
  }
  return "Unknown";
}

}  // namespace recur
