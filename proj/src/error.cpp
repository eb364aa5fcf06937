#include "demand/error.hpp"

namespace demand {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparseableDate: return "UnparseableDate";
    case ErrorCode::UnparseableNumber: return "UnparseableNumber";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::GapInSeries: return "GapInSeries";
    case ErrorCode::InvalidCalendar: return "InvalidCalendar";
    case ErrorCode::MissingLag: return "MissingLag";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::WeightsNotNormalized: return "WeightsNotNormalized";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::TooFewBases: return "TooFewBases";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::EmptySchedule: return "EmptySchedule";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::DegenerateDifferential: return "DegenerateDifferential";
    case ErrorCode::TooManyFeatures: return "TooManyFeatures";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownModel:
      return ErrorCategory::Config;
    case ErrorCode::MissingColumn:
    case ErrorCode::UnparseableDate:
    case ErrorCode::UnparseableNumber:
    case ErrorCode::NegativeCount:
    case ErrorCode::DuplicateDate:
    case ErrorCode::GapInSeries:
    case ErrorCode::InvalidCalendar:
    case ErrorCode::MissingLag:
    case ErrorCode::InsufficientHistory:
    case ErrorCode::Io:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Runtime;
  }
}

}  // namespace demand
