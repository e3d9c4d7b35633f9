#include <algorithm>
#include <cmath>

#include "seadet/augment.hpp"
#include "seadet/error.hpp"

namespace seadet {
namespace {

double overlap_iou(const BBoxAbs& a, const BBoxAbs& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace

void PlacementConstraint::validate() const {
  if (!(max_overlap_iou >= 0.0 && max_overlap_iou < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_overlap_iou must lie in [0, 1)");
  }
  if (!(horizon_fraction >= 0.0 && horizon_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "horizon_fraction must lie in [0, 1)");
  }
  if (max_attempts < 1) throw Error(ErrorCode::kInvalidArgument, "max_attempts must be >= 1");
  if (!(scale_min > 0.0 && scale_min <= scale_max)) {
    throw Error(ErrorCode::kInvalidArgument, "scale jitter range must be positive with min <= max");
  }
}

int scaled_extent(int extent, double scale) {
  return std::max(1, static_cast<int>(std::lround(extent * scale)));
}

std::optional<Placement> place_instance(const ImageRecord& background, int patch_width,
                                        int patch_height, std::span<const BBoxAbs> occupied,
                                        const PlacementConstraint& c, RngStream& rng) {
  c.validate();
  if (background.split != Split::kTrain) {
    throw Error(ErrorCode::kInvalidArgument,
                "paste backgrounds must come from the training split (image " +
                    std::to_string(background.image_id) + ")");
  }
  if (patch_width <= 0 || patch_height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch must have positive size");
  }
  const int W = background.width;
  const int H = background.height;
  const int y_min = static_cast<int>(std::ceil(c.horizon_fraction * H - 1e-9));
  for (int attempt = 0; attempt < c.max_attempts; ++attempt) {
    const double scale = rng.uniform(c.scale_min, c.scale_max);
    const int w = scaled_extent(patch_width, scale);
    const int h = scaled_extent(patch_height, scale);
    if (w > W || y_min + h > H) continue;
    const int x = static_cast<int>(rng.uniform_int(0, W - w));
    const int y = static_cast<int>(rng.uniform_int(y_min, H - h));
    const Placement p{x, y, scale, w, h};
    const BBoxAbs box = p.box();
    const bool clear = std::all_of(occupied.begin(), occupied.end(), [&](const BBoxAbs& o) {
      return overlap_iou(box, o) <= c.max_overlap_iou;
    });
    if (clear) return p;
  }
  return std::nullopt;
}

std::optional<Placement> place_instance(const ImageRecord& background,
                                        const InstancePatch& patch,
                                        const PlacementConstraint& c, RngStream& rng) {
  std::vector<BBoxAbs> occupied;
  occupied.reserve(background.annotations.size());
  for (const auto& ann : background.annotations) occupied.push_back(ann.bbox);
  return place_instance(background, patch.width(), patch.height(), occupied, c, rng);
}

}  // namespace seadet
