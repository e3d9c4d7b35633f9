#include "seadet/error.hpp"

namespace seadet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidImageGeometry: return "invalid-image-geometry";
    case ErrorCode::kDegenerateBox: return "degenerate-box";
    case ErrorCode::kInvalidBox: return "invalid-box";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kSplitPurity: return "split-purity";
    case ErrorCode::kInvalidDataset: return "invalid-dataset";
    case ErrorCode::kEmptyPatchPool: return "empty-patch-pool";
    case ErrorCode::kPlacementFailed: return "placement-failed";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kOutOfRange: return "out-of-range";
  }
  return "unknown";
}

}  // namespace seadet
