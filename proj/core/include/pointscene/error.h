#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pointscene {

// Every failure surfaced by the library is an Error carrying one of these
// codes. The category decides the CLI exit status.
enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kIo,
  kShapeMismatch,
  kBadCamera,
  kLengthMismatch,
  kTooFewViews,
  kSourceMismatch,
  kUnknownView,
  kOverlappingGroups,
  kUnknownInstance,
  kEmptyCloud,
  kNoValidPixels,
  kTooFewPoses,
  kDegenerateConfiguration,
  kBackendUnavailable,
  kBadResponse,
  kFidelityViolation,
  kUnknownBackend,
};

enum class ErrorCategory { kValidation, kIo, kBackend };

std::string_view ErrorCodeName(ErrorCode code);
ErrorCategory CategoryOf(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

#define PS_CHECK(cond, code, detail)                   \
  do {                                                 \
    if (!(cond)) {                                     \
      throw ::pointscene::Error((code), (detail));     \
    }                                                  \
  } while (false)

}  // namespace pointscene
