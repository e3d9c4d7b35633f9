#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seadet/dataset.hpp"

namespace seadet {

// All evaluation runs at a single IoU threshold (mAP@0.5).
inline constexpr double kIouThreshold = 0.5;
inline constexpr int kRecallGridPoints = 101;

// A detection in absolute pixel coordinates.
struct ScoredBox {
  std::int64_t image_id = 0;
  int class_id = 0;
  double confidence = 0.0;
  BBoxAbs bbox;
};

struct DetectionSet {
  std::vector<ScoredBox> detections;

  // Confidences in [0, 1] and class ids known to `categories`.
  void validate(const CategoryTable& categories) const;
};

double iou(const BBoxAbs& a, const BBoxAbs& b);

struct GtRef {
  std::int64_t image_id = 0;
  std::size_t annotation_index = 0;

  bool operator==(const GtRef&) const = default;
};

struct MatchResult {
  // Per detection, in DetectionSet order.
  std::vector<ScoredBox> detections;
  std::vector<bool> true_positive;
  std::vector<std::optional<GtRef>> matched_gt;
  // Per ground-truth image id, one flag per annotation.
  std::vector<std::pair<std::int64_t, std::vector<bool>>> gt_matched;
  // Ground-truth instances per class.
  std::vector<std::size_t> support;
};

// Order in which detections are considered: confidence descending, then
// image id, then position in the set.
std::vector<std::size_t> evaluation_order(std::span<const ScoredBox> detections);

// Greedy COCO-style matching over the images of `split`: each detection in
// evaluation order takes the unmatched same-class box with the highest
// IoU >= iou_thresh (lowest annotation index on ties).
MatchResult greedy_match(const DetectionSet& dets, const Dataset& gt, Split split,
                         double iou_thresh = kIouThreshold);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double confidence = 0.0;
};

struct PRCurve {
  int class_id = 0;
  // False when the class has no ground truth; such curves carry no points
  // and are left out of macro averages.
  bool defined = false;
  std::size_t support = 0;
  std::vector<PRPoint> points;
  double ap = 0.0;
};

// 101-point interpolated AP over a curve whose points run in descending
// confidence.
double interpolated_ap(std::span<const PRPoint> points);
// max precision over points with recall >= r, or 0.
double interpolated_precision(std::span<const PRPoint> points, double r);

PRCurve pr_curve(const MatchResult& matches, int class_id);
std::vector<PRCurve> pr_curves(const MatchResult& matches);

struct ClassMetrics {
  int class_id = 0;
  bool supported = false;
  std::size_t support = 0;
  double ap = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MacroMetrics {
  double map50 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  MacroMetrics macro;
  double confidence_at_max_f1 = 0.0;

  Json to_json(const CategoryTable& categories) const;
  static MetricsReport from_json(const Json& doc, const CategoryTable& categories);
};

double f1_score(double precision, double recall);

struct PointMetrics {
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
};

// Per-class and macro precision/recall counting detections with
// confidence >= threshold. Macro values average supported classes.
PointMetrics metrics_at_threshold(const MatchResult& matches, double threshold);

// mAP@0.5 over supported classes; point metrics at the confidence that
// maximizes macro F1 = 2PR/(P+R) of the macro P and R. Throws when no
// class has ground truth.
MetricsReport report(const MatchResult& matches, std::span<const PRCurve> curves);

// CSV with header class,confidence,precision,recall: every point of every
// defined curve, then a 101-point macro series on the recall grid.
std::string pr_csv(std::span<const PRCurve> curves, const CategoryTable* categories = nullptr);
void emit_pr_csv(const std::filesystem::path& path, std::span<const PRCurve> curves,
                 const CategoryTable* categories = nullptr);

struct ScenarioRow {
  std::string scenario;
  double map50 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ScenarioRow scenario_row(std::string scenario, const MetricsReport& report);

// Markdown with columns Scenario | mAP@0.5 | Precision | Recall | F1, two
// decimals.
std::string render_metrics_table(std::span<const ScenarioRow> rows);

// Normalized center box to pixels, clamped to the image. Unlike
// yolo_to_coco_box this accepts empty boxes, which simply never match.
BBoxAbs norm_to_pixels(const BBoxNorm& b, int width, int height);

// Reads a detection dump (JSON lines with normalized boxes) and converts
// boxes to pixels using the ground-truth image sizes.
DetectionSet read_detection_dump(const std::filesystem::path& path, const Dataset& gt);
DetectionSet parse_detection_dump(std::string_view text, const Dataset& gt);

}  // namespace seadet
