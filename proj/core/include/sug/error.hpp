#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sug {

enum class ErrorCode {
  kDuplicateUnit,
  kUnknownUnit,
  kSelfLoop,
  kParallelEdge,
  kTimeAnomaly,
  kNameAxiomViolation,
  kTimeOrderViolation,
  kBranchingUpdate,
  kSnapshotOrderError,
  kInvalidArgument,
  kIoError,
  kSchemaError,
  kCorruptLog,
  kParseError,
  kMissingField,
  kCsvError,
  kVersionParseError,
  kNoMatchingVersion,
  kNonSemverRelease,
  kInvalidRange,
  kInvalidTimestamp,
  kConflictingAlias,
  kUnknownPackage,
  kUnknownRoot,
  kInsufficientData,
  kTreeTooLarge,
};

/// Stable identifier used in quarantine reports and CLI diagnostics.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sug
