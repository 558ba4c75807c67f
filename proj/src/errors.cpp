#include "promptmotion/errors.hpp"

#include <fmt/format.h>

namespace promptmotion {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyPhrase: return "EmptyPhrase";
    case ErrorCode::UnknownPromptVersion: return "UnknownPromptVersion";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ClientUnavailable: return "ClientUnavailable";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::CacheCorrupt: return "CacheCorrupt";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::SkeletonMismatch: return "SkeletonMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingPastContext: return "MissingPastContext";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::PastWindowTooLarge: return "PastWindowTooLarge";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)), code_(code) {}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ClientUnavailable:
    case ErrorCode::EmptyCompletion:
      return 3;
    default:
      return 2;
  }
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace promptmotion
