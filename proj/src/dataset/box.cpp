#include <cmath>
#include <string>

#include "seadet/dataset.hpp"
#include "seadet/error.hpp"

namespace seadet {
namespace {

constexpr double kDegenerate = 1e-9;
// Absolute slack for boxes that were clamped in floating point.
constexpr double kBoundsSlack = 1e-6;

void check_geometry(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidImageGeometry,
                "image size " + std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

bool yolo_box_overflows(const BBoxNorm& b) {
  return b.cx - b.w / 2 < -kNormEpsilon || b.cy - b.h / 2 < -kNormEpsilon ||
         b.cx + b.w / 2 > 1.0 + kNormEpsilon || b.cy + b.h / 2 > 1.0 + kNormEpsilon;
}

BBoxAbs yolo_to_coco_box(const BBoxNorm& b, int width, int height) {
  check_geometry(width, height);
  if (!std::isfinite(b.cx) || !std::isfinite(b.cy) || !std::isfinite(b.w) ||
      !std::isfinite(b.h) || b.w <= 0.0 || b.h <= 0.0) {
    throw Error(ErrorCode::kInvalidBox, "normalized box must be finite with positive size");
  }
  BBoxAbs out{(b.cx - b.w / 2) * width, (b.cy - b.h / 2) * height, b.w * width,
              b.h * height};
  // Clamped edges are recomputed from the far corner so the surviving
  // extent is not polluted by the overflow's rounding.
  if (out.x < 0.0) {
    out.w = (b.cx + b.w / 2) * width;
    out.x = 0.0;
  }
  if (out.y < 0.0) {
    out.h = (b.cy + b.h / 2) * height;
    out.y = 0.0;
  }
  if (out.x + out.w > width) out.w = width - out.x;
  if (out.y + out.h > height) out.h = height - out.y;
  if (out.w < kDegenerate || out.h < kDegenerate) {
    throw Error(ErrorCode::kDegenerateBox, "box collapses after clamping to the image");
  }
  return out;
}

void validate_box(const BBoxAbs& b, int width, int height) {
  check_geometry(width, height);
  const bool finite = std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
                      std::isfinite(b.h);
  if (!finite || b.w <= 0.0 || b.h <= 0.0 || b.x < -kBoundsSlack ||
      b.y < -kBoundsSlack || b.x + b.w > width + kBoundsSlack ||
      b.y + b.h > height + kBoundsSlack) {
    throw Error(ErrorCode::kInvalidBox,
                "box [" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
                    std::to_string(b.w) + ", " + std::to_string(b.h) +
                    "] outside " + std::to_string(width) + "x" + std::to_string(height));
  }
}

BBoxNorm coco_to_yolo_box(const BBoxAbs& b, int width, int height) {
  check_geometry(width, height);
  if (b.w > 0.0 && b.h > 0.0 && (b.w < kDegenerate || b.h < kDegenerate)) {
    throw Error(ErrorCode::kDegenerateBox, "box thinner than 1e-9 px");
  }
  validate_box(b, width, height);
  return {(b.x + b.w / 2) / width, (b.y + b.h / 2) / height, b.w / width,
          b.h / height};
}

}  // namespace seadet
