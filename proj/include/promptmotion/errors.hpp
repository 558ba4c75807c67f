#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace promptmotion {

enum class ErrorCode {
  EmptyPhrase,
  UnknownPromptVersion,
  InvalidConfig,
  ClientUnavailable,
  EmptyCompletion,
  CacheCorrupt,
  EmptyText,
  EmptyList,
  DimensionMismatch,
  DegenerateInput,
  NotARotation,
  SkeletonMismatch,
  ShapeMismatch,
  MissingPastContext,
  NonFiniteLoss,
  PastWindowTooLarge,
  SchemaError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying one of the codes
// above, so callers (CLI, bindings) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// 3 for upstream client failures, 2 for everything else.
int exit_code_for(ErrorCode code);

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace promptmotion
