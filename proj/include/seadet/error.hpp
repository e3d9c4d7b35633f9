#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seadet {

enum class ErrorCode {
  kInvalidImageGeometry,
  kDegenerateBox,
  kInvalidBox,
  kInvalidArgument,
  kSplitPurity,
  kInvalidDataset,
  kEmptyPatchPool,
  kPlacementFailed,
  kIo,
  kConfig,
  kOutOfRange,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; `code()` identifies the failure
// class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seadet
