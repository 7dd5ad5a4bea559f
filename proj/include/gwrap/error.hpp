#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gwrap {

enum class ErrorCode {
  kInvalidArgument = 10,
  kZeroNormal = 11,
  kNoCameras = 12,
  kDegenerateInput = 13,
  kInsufficientPoints = 14,
  kCropEmpty = 15,
  kEmptyCloud = 16,
  kParseError = 17,
  kVersionMismatch = 18,
  kBadParams = 19,
  kDiverged = 20,
  kIoError = 21,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. The code is stable and the
// CLI maps it to its process exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gwrap
