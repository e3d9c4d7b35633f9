#include <algorithm>
#include <cmath>

#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"

namespace seadet {
namespace {

struct Corners {
  double x0, y0, x1, y1;
};

Corners corners(const BBoxNorm& b) {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

double class_probability(const Detection& d, int class_id) {
  if (!d.class_scores.empty()) {
    return class_id >= 0 && static_cast<std::size_t>(class_id) < d.class_scores.size()
               ? d.class_scores[static_cast<std::size_t>(class_id)]
               : 0.0;
  }
  return d.class_id == class_id ? d.confidence : 0.0;
}

}  // namespace

double generalized_iou(const BBoxNorm& a, const BBoxNorm& b) {
  const Corners p = corners(a);
  const Corners q = corners(b);
  const double iw = std::max(0.0, std::min(p.x1, q.x1) - std::max(p.x0, q.x0));
  const double ih = std::max(0.0, std::min(p.y1, q.y1) - std::max(p.y0, q.y0));
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  const double hull = (std::max(p.x1, q.x1) - std::min(p.x0, q.x0)) *
                      (std::max(p.y1, q.y1) - std::min(p.y0, q.y0));
  if (uni <= 0.0 || hull <= 0.0) return 0.0;
  return inter / uni - (hull - uni) / hull;
}

Matrix matching_cost_matrix(std::span<const Detection> preds,
                            std::span<const GroundTruthBox> gt, const MatchCosts& costs) {
  Matrix m(static_cast<int>(gt.size()), static_cast<int>(preds.size()));
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const BBoxNorm& a = preds[p].bbox;
      const BBoxNorm& b = gt[g].bbox;
      const double l1 = std::fabs(a.cx - b.cx) + std::fabs(a.cy - b.cy) +
                        std::fabs(a.w - b.w) + std::fabs(a.h - b.h);
      m(static_cast<int>(g), static_cast<int>(p)) =
          costs.w_cls * (1.0 - class_probability(preds[p], gt[g].class_id)) +
          costs.w_l1 * l1 + costs.w_giou * (1.0 - generalized_iou(a, b));
    }
  }
  return m;
}

Assignment match_predictions(std::span<const Detection> preds,
                             std::span<const GroundTruthBox> gt, const MatchCosts& costs) {
  if (preds.size() < gt.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::to_string(preds.size()) + " predictions cannot cover " +
                    std::to_string(gt.size()) + " ground-truth boxes");
  }
  return solve_assignment(matching_cost_matrix(preds, gt, costs));
}

std::vector<GroundTruthBox> ground_truth_of(const ImageRecord& image) {
  std::vector<GroundTruthBox> out;
  out.reserve(image.annotations.size());
  for (const auto& ann : image.annotations) {
    out.push_back({ann.category_id, coco_to_yolo_box(ann.bbox, image.width, image.height)});
  }
  return out;
}

}  // namespace seadet
