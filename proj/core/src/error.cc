#include "pointscene/error.h"

namespace pointscene {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kMissingFile:
      return "missing_file";
    case ErrorCode::kIo:
      return "io_error";
    case ErrorCode::kShapeMismatch:
      return "shape_mismatch";
    case ErrorCode::kBadCamera:
      return "bad_camera";
    case ErrorCode::kLengthMismatch:
      return "length_mismatch";
    case ErrorCode::kTooFewViews:
      return "too_few_views";
    case ErrorCode::kSourceMismatch:
      return "source_mismatch";
    case ErrorCode::kUnknownView:
      return "unknown_view";
    case ErrorCode::kOverlappingGroups:
      return "overlapping_groups";
    case ErrorCode::kUnknownInstance:
      return "unknown_instance";
    case ErrorCode::kEmptyCloud:
      return "empty_cloud";
    case ErrorCode::kNoValidPixels:
      return "no_valid_pixels";
    case ErrorCode::kTooFewPoses:
      return "too_few_poses";
    case ErrorCode::kDegenerateConfiguration:
      return "degenerate_configuration";
    case ErrorCode::kBackendUnavailable:
      return "backend_unavailable";
    case ErrorCode::kBadResponse:
      return "bad_response";
    case ErrorCode::kFidelityViolation:
      return "fidelity_violation";
    case ErrorCode::kUnknownBackend:
      return "unknown_backend";
  }
  return "unknown";
}

ErrorCategory CategoryOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile:
    case ErrorCode::kIo:
      return ErrorCategory::kIo;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kBadResponse:
    case ErrorCode::kFidelityViolation:
    case ErrorCode::kUnknownBackend:
      return ErrorCategory::kBackend;
    default:
      return ErrorCategory::kValidation;
  }
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace pointscene
