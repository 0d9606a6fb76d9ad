#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stem {

enum class ErrorCode {
  MalformedInput,
  CycleDetected,
  MultipleRoots,
  DanglingParent,
  InvalidLabel,
  InvalidConfig,
  EmptyCore,
  DimensionMismatch,
  TooLarge,
  NoLabels,
  NothingToScore,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::DanglingParent: return "DanglingParent";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyCore: return "EmptyCore";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NoLabels: return "NoLabels";
    case ErrorCode::NothingToScore: return "NothingToScore";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Non-fatal diagnostic attached to a conversation.
struct Warning {
  std::string conversation_id;
  std::string message;

  bool operator==(const Warning&) const = default;
};

}  // namespace stem
