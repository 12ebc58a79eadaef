#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ete {

enum class ErrorCode {
  NonFiniteValue,
  RaggedRepetitions,
  EmptyEnsemble,
  IndexUnderflow,
  ShapeMismatch,
  InsufficientData,
  KTooLarge,
  DomainError,
  DegenerateData,
  InvalidPermutation,
  UnknownMethod,
  IntegrationDiverged,
  UnstableParameters,
  ParseError,
  GridIncomplete,
  MagicMismatch,
  IoError,
  ResultMismatch,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::RaggedRepetitions: return "RaggedRepetitions";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::IndexUnderflow: return "IndexUnderflow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InvalidPermutation: return "InvalidPermutation";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::IntegrationDiverged: return "IntegrationDiverged";
    case ErrorCode::UnstableParameters: return "UnstableParameters";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::GridIncomplete: return "GridIncomplete";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ResultMismatch: return "ResultMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures are reported through this type; code() identifies the
// failure class, what() carries the human readable location/context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace ete
