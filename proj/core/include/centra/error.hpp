#pragma once

#include <stdexcept>
#include <string>

namespace centra {

// Every failure the library raises carries one of these codes. The CLI maps
// the coarse kind to its exit code (config/usage = 2, data/format = 3,
// numerical = 4), and tests match on the code instead of message text.
enum class ErrorCode {
  // configuration / usage
  ConfigError,
  BadRange,
  VocabTooSmall,
  NotRenderable,
  TooFewFormats,
  OutOfRangeP,
  // data / format
  RaggedRows,
  EmptyTable,
  EmptyId,
  EmptyCorpus,
  EmptyText,
  CellContainsDelimiter,
  MalformedFile,
  BadMagic,
  DimensionMismatch,
  DuplicateKey,
  MissingKey,
  TruncatedFile,
  ZeroVector,
  EmptyViewSet,
  MissingCentroid,
  ShapeMismatch,
  NoMultiViewTables,
  StaleCache,
  EmptyResults,
  UnmatchedQueries,
  LengthMismatch,
  // numerical
  NonFiniteValue,
  NonFiniteInput,
  NonFiniteGradient,
};

enum class ErrorKind { Config, Data, Numeric };

constexpr ErrorKind kind_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::BadRange:
    case ErrorCode::VocabTooSmall:
    case ErrorCode::NotRenderable:
    case ErrorCode::TooFewFormats:
    case ErrorCode::OutOfRangeP:
      return ErrorKind::Config;
    case ErrorCode::NonFiniteValue:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::NonFiniteGradient:
      return ErrorKind::Numeric;
    default:
      return ErrorKind::Data;
  }
}

constexpr const char* name_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::VocabTooSmall: return "VocabTooSmall";
    case ErrorCode::NotRenderable: return "NotRenderable";
    case ErrorCode::TooFewFormats: return "TooFewFormats";
    case ErrorCode::OutOfRangeP: return "OutOfRangeP";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::EmptyId: return "EmptyId";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::CellContainsDelimiter: return "CellContainsDelimiter";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyViewSet: return "EmptyViewSet";
    case ErrorCode::MissingCentroid: return "MissingCentroid";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoMultiViewTables: return "NoMultiViewTables";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::UnmatchedQueries: return "UnmatchedQueries";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(name_of(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }
  ErrorKind kind() const { return kind_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace centra
