#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "seadet/error.hpp"
#include "seadet/eval.hpp"

namespace seadet {

void DetectionSet::validate(const CategoryTable& categories) const {
  for (const auto& d : detections) {
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "detection confidence outside [0, 1]");
    }
    if (!categories.contains(d.class_id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "detection class id " + std::to_string(d.class_id) + " is unknown");
    }
  }
}

double iou(const BBoxAbs& a, const BBoxAbs& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> evaluation_order(std::span<const ScoredBox> detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = detections[i];
    const auto& b = detections[j];
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return i < j;
  });
  return order;
}

MatchResult greedy_match(const DetectionSet& dets, const Dataset& gt, Split split,
                         double iou_thresh) {
  MatchResult out;
  out.detections = dets.detections;
  out.true_positive.assign(dets.detections.size(), false);
  out.matched_gt.assign(dets.detections.size(), std::nullopt);
  out.support.assign(gt.categories.size(), 0);

  std::unordered_map<std::int64_t, std::size_t> slot;
  for (const auto& img : gt.images) {
    if (img.split != split) continue;
    slot.emplace(img.image_id, out.gt_matched.size());
    out.gt_matched.emplace_back(img.image_id, std::vector<bool>(img.annotations.size(), false));
    for (const auto& a : img.annotations) {
      if (gt.categories.contains(a.category_id)) ++out.support[a.category_id];
    }
  }

  // A single global pass in evaluation order visits each (class, image)
  // group in descending confidence, which is all the greedy rule needs.
  for (std::size_t k : evaluation_order(dets.detections)) {
    const auto& det = dets.detections[k];
    auto it = slot.find(det.image_id);
    if (it == slot.end()) continue;
    const ImageRecord& img = *gt.find(det.image_id);
    auto& used = out.gt_matched[it->second].second;
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < img.annotations.size(); ++j) {
      const auto& a = img.annotations[j];
      if (used[j] || a.category_id != det.class_id) continue;
      const double v = iou(det.bbox, a.bbox);
      if (v >= iou_thresh && v > best) {
        best = v;
        best_j = j;
      }
    }
    if (best >= 0.0) {
      used[best_j] = true;
      out.true_positive[k] = true;
      out.matched_gt[k] = GtRef{det.image_id, best_j};
    }
  }
  return out;
}

}  // namespace seadet
