#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kinesnap {

enum class ErrorCode {
  EmptyChain,
  ZeroAxis,
  NonFinite,
  BadBounds,
  DofLengthMismatch,
  NonPositiveDelta,
  NonFiniteInput,
  InvalidConfig,
  WrongMode,
  IndexOutOfRange,
  UnknownJoint,
  SyntaxError,
  ArityError,
  ValidationError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::ZeroAxis: return "ZeroAxis";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadBounds: return "BadBounds";
    case ErrorCode::DofLengthMismatch: return "DofLengthMismatch";
    case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::WrongMode: return "WrongMode";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UnknownJoint: return "UnknownJoint";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Failure while reading a chain file or pose script. `line` is 1-based;
/// 0 means the problem concerns the document as a whole.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, int line, const std::string& message)
      : Error(code, format(line, message)), line_(line), detail_(message) {}

  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(int line, const std::string& message) {
    if (line <= 0) return message;
    return "line " + std::to_string(line) + ": " + message;
  }

  int line_;
  std::string detail_;
};

}  // namespace kinesnap
