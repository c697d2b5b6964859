#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reshi {

enum class ErrorCode {
  CycleDetected,
  UnknownTask,
  DuplicateEdge,
  InvalidWorkflow,
  DimensionMismatch,
  ParseError,
  EmptyDataset,
  UnknownMachineType,
  EmptyTrainingSet,
  SchemaMismatch,
  NoAllocatableNode,
  NoFit,
  MissingPrediction,
  MissingHistoricalRuntime,
  NonPositiveRuntime,
  MissingRuntime,
  Deadlock,
  EmptyCatalog,
  InvalidPlan,
  EmptyCell,
  EmptyReport,
  IoError,
  UnsupportedVersion,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::InvalidWorkflow: return "InvalidWorkflow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownMachineType: return "UnknownMachineType";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NoAllocatableNode: return "NoAllocatableNode";
    case ErrorCode::NoFit: return "NoFit";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::MissingHistoricalRuntime: return "MissingHistoricalRuntime";
    case ErrorCode::NonPositiveRuntime: return "NonPositiveRuntime";
    case ErrorCode::MissingRuntime: return "MissingRuntime";
    case ErrorCode::Deadlock: return "Deadlock";
    case ErrorCode::EmptyCatalog: return "EmptyCatalog";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a stable, machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the line-oriented loaders; keeps the position of the offending cell.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t row, std::string column, std::string reason)
      : Error(ErrorCode::ParseError,
              source + ":" + std::to_string(row) + (column.empty() ? "" : " column '" + column + "'") +
                  ": " + reason),
        source_(std::move(source)),
        row_(row),
        column_(std::move(column)),
        reason_(std::move(reason)) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string source_;
  std::size_t row_;
  std::string column_;
  std::string reason_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace reshi
