#include "sug/error.hpp"

namespace sug {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDuplicateUnit: return "DuplicateUnit";
    case ErrorCode::kUnknownUnit: return "UnknownUnit";
    case ErrorCode::kSelfLoop: return "SelfLoop";
    case ErrorCode::kParallelEdge: return "ParallelEdge";
    case ErrorCode::kTimeAnomaly: return "TimeAnomaly";
    case ErrorCode::kNameAxiomViolation: return "NameAxiomViolation";
    case ErrorCode::kTimeOrderViolation: return "TimeOrderViolation";
    case ErrorCode::kBranchingUpdate: return "BranchingUpdate";
    case ErrorCode::kSnapshotOrderError: return "SnapshotOrderError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kCsvError: return "CsvError";
    case ErrorCode::kVersionParseError: return "VersionParseError";
    case ErrorCode::kNoMatchingVersion: return "NoMatchingVersion";
    case ErrorCode::kNonSemverRelease: return "NonSemverRelease";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kInvalidTimestamp: return "InvalidTimestamp";
    case ErrorCode::kConflictingAlias: return "ConflictingAlias";
    case ErrorCode::kUnknownPackage: return "UnknownPackage";
    case ErrorCode::kUnknownRoot: return "UnknownRoot";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kTreeTooLarge: return "TreeTooLarge";
  }
  return "Unknown";
}

}  // namespace sug
