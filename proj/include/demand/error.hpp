#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace demand {

enum class ErrorCode {
  // data
  MissingColumn,
  UnparseableDate,
  UnparseableNumber,
  NegativeCount,
  DuplicateDate,
  GapInSeries,
  InvalidCalendar,
  MissingLag,
  InsufficientHistory,
  // model / statistics
  WeightsNotNormalized,
  SingularDesign,
  KTooLarge,
  TooFewBases,
  InsufficientRows,
  EmptySchedule,
  MissingCell,
  DegenerateDifferential,
  TooManyFeatures,
  DegenerateSamples,
  InvalidArgument,
  // configuration
  InvalidConfig,
  UnknownModel,
  Io,
};

enum class ErrorCategory { Config, Data, Runtime };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace demand
