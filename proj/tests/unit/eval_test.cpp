#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "seadet/error.hpp"
#include "seadet/eval.hpp"
#include "seadet/rng.hpp"

using namespace seadet;

namespace {

Dataset single_image(std::vector<Annotation> anns, std::int64_t id = 1) {
  Dataset d;
  d.categories = CategoryTable::maritime();
  ImageRecord r;
  r.image_id = id;
  r.width = 100;
  r.height = 100;
  r.split = Split::kTest;
  r.annotations = std::move(anns);
  for (std::size_t i = 0; i < r.annotations.size(); ++i) r.annotations[i].instance_id = int(i);
  d.images.push_back(std::move(r));
  return d;
}

Annotation gt_box(int cls, BBoxAbs b) { return {cls, b, AnnotationSource::kOriginal, 0}; }

ScoredBox det(int cls, double conf, BBoxAbs b, std::int64_t image = 1) {
  return {image, cls, conf, b};
}

std::size_t count_lines(const std::string& s) {
  return std::size_t(std::count(s.begin(), s.end(), '\n'));
}

// Random boxes on a coarse grid so that IoU ties and near-threshold cases
// show up often.
BBoxAbs grid_box(RngStream& rng) {
  return {double(rng.uniform_int(0, 6) * 5), double(rng.uniform_int(0, 6) * 5),
          double(rng.uniform_int(1, 4) * 5), double(rng.uniform_int(1, 4) * 5)};
}

BBoxAbs jitter(const BBoxAbs& b, RngStream& rng) {
  return {b.x + double(rng.uniform_int(-2, 2)), b.y + double(rng.uniform_int(-2, 2)),
          std::max(1.0, b.w + double(rng.uniform_int(-2, 2))),
          std::max(1.0, b.h + double(rng.uniform_int(-2, 2)))};
}

oracle::Box to_oracle(const BBoxAbs& b) { return {b.x, b.y, b.w, b.h}; }

}  // namespace

TEST(Iou, HandCasesAgainstPixelGrid) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {20, 20, 5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {5, 5, 10, 10}), oracle::grid_iou(0, 0, 10, 10, 5, 5, 10, 10));
  EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 5, 10, 10}), 25.0 / 175.0, 1e-15);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
}

TEST(Iou, RandomIntegerBoxesMatchPixelGrid) {
  RngStream rng(21);
  for (int i = 0; i < 2000; ++i) {
    const int ax = int(rng.uniform_int(0, 20)), ay = int(rng.uniform_int(0, 20));
    const int aw = int(rng.uniform_int(1, 15)), ah = int(rng.uniform_int(1, 15));
    const int bx = int(rng.uniform_int(0, 20)), by = int(rng.uniform_int(0, 20));
    const int bw = int(rng.uniform_int(1, 15)), bh = int(rng.uniform_int(1, 15));
    EXPECT_NEAR(iou({double(ax), double(ay), double(aw), double(ah)},
                    {double(bx), double(by), double(bw), double(bh)}),
                oracle::grid_iou(ax, ay, aw, ah, bx, by, bw, bh), 1e-12);
  }
}

TEST(Greedy, HandCases) {
  const Dataset d = single_image({gt_box(0, {10, 10, 20, 20})});
  // IoU 0.6 with the gt
  const BBoxAbs near{10, 10, 20, 12};
  ASSERT_NEAR(iou(near, {10, 10, 20, 20}), 0.6, 1e-12);
  MatchResult one = greedy_match({{det(0, 0.5, near)}}, d, Split::kTest);
  EXPECT_TRUE(one.true_positive[0]);
  ASSERT_TRUE(one.matched_gt[0].has_value());
  EXPECT_EQ(one.matched_gt[0]->annotation_index, 0u);

  MatchResult two = greedy_match({{det(0, 0.4, {10, 10, 20, 20}), det(0, 0.7, near)}}, d,
                                 Split::kTest);
  EXPECT_FALSE(two.true_positive[0]);
  EXPECT_TRUE(two.true_positive[1]);

  MatchResult gated = greedy_match({{det(1, 0.9, {10, 10, 20, 20})}}, d, Split::kTest);
  EXPECT_FALSE(gated.true_positive[0]);
  EXPECT_EQ(gated.support, (std::vector<std::size_t>{1, 0, 0}));
}

TEST(Greedy, DetectionsOutsideSplitAreFalsePositives) {
  Dataset d = single_image({gt_box(0, {10, 10, 20, 20})});
  const MatchResult m = greedy_match({{det(0, 0.9, {10, 10, 20, 20}, 99)}}, d, Split::kTest);
  EXPECT_FALSE(m.true_positive[0]);
  d.images[0].split = Split::kVal;
  EXPECT_EQ(greedy_match({{det(0, 0.9, {10, 10, 20, 20})}}, d, Split::kTest).support,
            (std::vector<std::size_t>{0, 0, 0}));
}

// Exhaustive comparison with the enumeration oracle over every instance
// size up to 5 detections x 5 boxes.
TEST(Greedy, EqualsBruteForceOnSmallInstances) {
  RngStream rng(22);
  std::size_t checked = 0;
  for (int n_det = 0; n_det <= 5; ++n_det) {
    for (int n_gt = 0; n_gt <= 5; ++n_gt) {
      for (int trial = 0; trial < 250; ++trial) {
        std::vector<Annotation> anns;
        std::vector<oracle::Gt> ogt;
        for (int g = 0; g < n_gt; ++g) {
          const int cls = int(rng.uniform_int(0, 1));
          const BBoxAbs b = grid_box(rng);
          anns.push_back(gt_box(cls, b));
          ogt.push_back({cls, to_oracle(b)});
        }
        const Dataset d = single_image(anns);
        DetectionSet set;
        std::vector<oracle::Det> odet;
        for (int k = 0; k < n_det; ++k) {
          const int cls = int(rng.uniform_int(0, 1));
          const BBoxAbs b = (n_gt > 0 && rng.coin())
                                ? jitter(anns[std::size_t(rng.uniform_int(0, n_gt - 1))].bbox, rng)
                                : grid_box(rng);
          const double conf = double(rng.uniform_int(1, 4)) / 4;  // ties on purpose
          set.detections.push_back(det(cls, conf, b));
          odet.push_back({cls, conf, to_oracle(b)});
        }
        const MatchResult m = greedy_match(set, d, Split::kTest);
        const std::vector<int> expected = oracle::brute_force_greedy(odet, ogt, kIouThreshold);
        ASSERT_EQ(expected.size(), std::size_t(n_det));
        for (int k = 0; k < n_det; ++k) {
          const auto kk = std::size_t(k);
          EXPECT_EQ(m.true_positive[kk], expected[kk] >= 0);
          if (expected[kk] >= 0) {
            ASSERT_TRUE(m.matched_gt[kk].has_value());
            EXPECT_EQ(m.matched_gt[kk]->annotation_index, std::size_t(expected[kk]));
          }
        }
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 36u * 250u);
}

TEST(Greedy, EachBoxMatchedAtMostOnceAcrossImages) {
  RngStream rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset d = single_image({}, 1);
    ImageRecord second = d.images[0];
    second.image_id = 2;
    for (int g = 0; g < 4; ++g) {
      d.images[0].annotations.push_back({0, grid_box(rng), AnnotationSource::kOriginal, g});
      second.annotations.push_back({0, grid_box(rng), AnnotationSource::kOriginal, g});
    }
    d.images.push_back(second);
    DetectionSet set;
    for (int k = 0; k < 10; ++k) {
      const auto& img = d.images[std::size_t(rng.uniform_int(0, 1))];
      set.detections.push_back(det(0, rng.uniform01(),
                                   jitter(img.annotations[std::size_t(rng.uniform_int(0, 3))].bbox, rng),
                                   img.image_id));
    }
    const MatchResult m = greedy_match(set, d, Split::kTest);
    std::vector<GtRef> refs;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < m.true_positive.size(); ++k) {
      EXPECT_EQ(m.true_positive[k], m.matched_gt[k].has_value());
      if (m.matched_gt[k]) {
        EXPECT_EQ(m.matched_gt[k]->image_id, set.detections[k].image_id);
        refs.push_back(*m.matched_gt[k]);
        ++tp;
      }
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      for (std::size_t j = i + 1; j < refs.size(); ++j) EXPECT_FALSE(refs[i] == refs[j]);
    }
    std::size_t flagged = 0;
    for (const auto& [id, flags] : m.gt_matched) flagged += std::size_t(std::count(flags.begin(), flags.end(), true));
    EXPECT_EQ(flagged, tp);
  }
}

TEST(Greedy, OrderIsDeterministicUnderTies) {
  std::vector<ScoredBox> dets{det(0, 0.5, {}, 3), det(0, 0.5, {}, 1), det(0, 0.9, {}, 2),
                              det(0, 0.5, {}, 1)};
  EXPECT_EQ(evaluation_order(dets), (std::vector<std::size_t>{2, 1, 3, 0}));
}

TEST(Ap, HandCases) {
  const Dataset d = single_image({gt_box(0, {10, 10, 20, 20})});
  const BBoxAbs hit{10, 10, 20, 20};
  const BBoxAbs miss{60, 60, 20, 20};

  EXPECT_EQ(pr_curve(greedy_match({{det(0, 0.9, hit)}}, d, Split::kTest), 0).ap, 1.0);
  const PRCurve half =
      pr_curve(greedy_match({{det(0, 0.9, miss), det(0, 0.8, hit)}}, d, Split::kTest), 0);
  EXPECT_EQ(half.ap, 0.5);
  for (int i = 0; i <= 100; ++i) EXPECT_EQ(interpolated_precision(half.points, i / 100.0), 0.5);
  EXPECT_EQ(pr_curve(greedy_match({}, d, Split::kTest), 0).ap, 0.0);

  const PRCurve undefined = pr_curve(greedy_match({{det(1, 0.9, hit)}}, d, Split::kTest), 1);
  EXPECT_FALSE(undefined.defined);
  EXPECT_TRUE(undefined.points.empty());
}

namespace {

MatchResult synthetic_matches(const std::vector<double>& conf, const std::vector<bool>& tp,
                              std::size_t n_gt) {
  MatchResult m;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    m.detections.push_back(det(0, conf[i], {}, std::int64_t(i)));
    m.true_positive.push_back(tp[i]);
    m.matched_gt.emplace_back();
  }
  m.support = {n_gt};
  return m;
}

}  // namespace

TEST(Ap, MatchesThresholdOracle) {
  RngStream rng(24);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = int(rng.uniform_int(0, 12));
    std::vector<double> conf;
    std::vector<bool> tp;
    std::size_t n_tp = 0;
    for (int i = 0; i < n; ++i) {
      conf.push_back(rng.uniform01());
      tp.push_back(rng.coin());
      n_tp += tp.back();
    }
    const std::size_t n_gt = n_tp + std::size_t(rng.uniform_int(0, 3));
    if (n_gt == 0) continue;
    const PRCurve c = pr_curve(synthetic_matches(conf, tp, n_gt), 0);
    EXPECT_NEAR(c.ap, oracle::threshold_ap(conf, tp, n_gt), 1e-12);
    EXPECT_GE(c.ap, 0.0);
    EXPECT_LE(c.ap, 1.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].recall, c.points[i - 1].recall);
      EXPECT_GE(c.points[i - 1].confidence, c.points[i].confidence);
    }

    // A correct detection above all others never lowers AP.
    auto conf2 = conf;
    auto tp2 = tp;
    conf2.push_back(2.0);
    tp2.push_back(true);
    EXPECT_GE(pr_curve(synthetic_matches(conf2, tp2, n_gt + 1), 0).ap + 1e-12,
              pr_curve(synthetic_matches(conf, tp, n_gt + 1), 0).ap);
  }
}

TEST(Report, F1Basics) {
  EXPECT_EQ(f1_score(0.5, 0.5), 0.5);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
  EXPECT_NEAR(f1_score(0.92, 0.91), 2 * 0.92 * 0.91 / 1.83, 1e-15);
}

// Brute-force sweep over every distinct confidence for the best macro F1,
// recounting tp/fp directly from the match flags.
TEST(Report, PointMetricsAtMaxF1Recompute) {
  RngStream rng(25);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Annotation> anns;
    for (int g = 0; g < 6; ++g) anns.push_back(gt_box(int(rng.uniform_int(0, 2)), grid_box(rng)));
    const Dataset d = single_image(anns);
    DetectionSet set;
    for (int k = 0; k < 10; ++k) {
      const auto& a = anns[std::size_t(rng.uniform_int(0, 5))];
      const int cls = rng.uniform01() < 0.8 ? a.category_id : int(rng.uniform_int(0, 2));
      set.detections.push_back(det(cls, double(rng.uniform_int(1, 20)) / 20, jitter(a.bbox, rng)));
    }
    const MatchResult m = greedy_match(set, d, Split::kTest);
    const auto curves = pr_curves(m);
    const MetricsReport r = report(m, curves);

    auto macro_at = [&](double thr) {
      double p_sum = 0, r_sum = 0;
      int supported = 0;
      for (int c = 0; c < 3; ++c) {
        if (m.support[std::size_t(c)] == 0) continue;
        std::size_t tp = 0, n = 0;
        for (std::size_t k = 0; k < set.detections.size(); ++k) {
          if (set.detections[k].class_id != c || set.detections[k].confidence < thr) continue;
          ++n;
          tp += m.true_positive[k];
        }
        p_sum += n ? double(tp) / double(n) : 0.0;
        r_sum += double(tp) / double(m.support[std::size_t(c)]);
        ++supported;
      }
      return std::pair{p_sum / supported, r_sum / supported};
    };
    const auto [p, rc] = macro_at(r.confidence_at_max_f1);
    const double f1 = (p + rc) > 0 ? 2 * p * rc / (p + rc) : 0.0;
    EXPECT_NEAR(r.macro.precision, p, 1e-9);
    EXPECT_NEAR(r.macro.recall, rc, 1e-9);
    EXPECT_NEAR(r.macro.f1, f1, 1e-9);

    double best = 0;
    for (const auto& s : set.detections) {
      const auto [bp, br] = macro_at(s.confidence);
      best = std::max(best, (bp + br) > 0 ? 2 * bp * br / (bp + br) : 0.0);
    }
    EXPECT_NEAR(r.macro.f1, best, 1e-9);

    const PointMetrics pm = metrics_at_threshold(m, r.confidence_at_max_f1);
    EXPECT_NEAR(f1_score(pm.macro_precision, pm.macro_recall), r.macro.f1, 1e-9);

    double map = 0;
    int supported = 0;
    for (const auto& c : curves) {
      if (!c.defined) continue;
      map += c.ap;
      ++supported;
    }
    EXPECT_NEAR(r.macro.map50, map / supported, 1e-12);
  }
}

TEST(Report, SingleClassMacroEqualsClass) {
  const Dataset d = single_image({gt_box(2, {10, 10, 20, 20}), gt_box(2, {50, 50, 20, 20})});
  const MatchResult m = greedy_match(
      {{det(2, 0.9, {10, 10, 20, 20}), det(2, 0.6, {0, 60, 10, 10}), det(2, 0.3, {50, 50, 20, 20})}},
      d, Split::kTest);
  const MetricsReport r = report(m, pr_curves(m));
  const ClassMetrics& c = r.per_class[2];
  EXPECT_TRUE(c.supported);
  EXPECT_FALSE(r.per_class[0].supported);
  EXPECT_EQ(r.macro.map50, c.ap);
  EXPECT_EQ(r.macro.precision, c.precision);
  EXPECT_EQ(r.macro.recall, c.recall);
  EXPECT_EQ(r.macro.f1, c.f1);
}

TEST(Report, NoSupportThrowsAndNoDetectionsIsZero) {
  const Dataset empty = single_image({});
  const MatchResult none = greedy_match({}, empty, Split::kTest);
  EXPECT_THROW(report(none, pr_curves(none)), Error);

  const Dataset d = single_image({gt_box(0, {10, 10, 20, 20})});
  const MatchResult m = greedy_match({}, d, Split::kTest);
  const MetricsReport r = report(m, pr_curves(m));
  EXPECT_EQ(r.macro.map50, 0.0);
  EXPECT_EQ(r.macro.f1, 0.0);
  EXPECT_EQ(r.confidence_at_max_f1, 0.0);
}

TEST(Report, JsonRoundTrip) {
  const Dataset d = single_image({gt_box(0, {10, 10, 20, 20}), gt_box(1, {50, 50, 10, 30})});
  const MatchResult m = greedy_match({{det(0, 0.9, {10, 10, 20, 20}), det(1, 0.4, {0, 0, 5, 5})}},
                                     d, Split::kTest);
  const MetricsReport r = report(m, pr_curves(m));
  const Json j = r.to_json(d.categories);
  EXPECT_EQ(j["iou_threshold"], 0.5);
  const MetricsReport back = MetricsReport::from_json(j, d.categories);
  EXPECT_EQ(back.to_json(d.categories), j);
}

TEST(Csv, SeriesAndRowCounts) {
  const Dataset d = single_image({gt_box(0, {10, 10, 20, 20}), gt_box(1, {50, 50, 10, 30})});
  const MatchResult m = greedy_match(
      {{det(0, 0.9, {10, 10, 20, 20}), det(0, 0.5, {70, 10, 10, 10}), det(1, 0.4, {50, 50, 10, 30})}},
      d, Split::kTest);
  const auto curves = pr_curves(m);
  const std::string csv = pr_csv(curves, &d.categories);
  std::size_t points = 0;
  for (const auto& c : curves) points += c.points.size();
  EXPECT_EQ(points, 3u);
  EXPECT_EQ(count_lines(csv), 1 + points + 101);

  std::set<std::string> series;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "class,confidence,precision,recall");
  while (std::getline(in, line)) series.insert(line.substr(0, line.find(',')));
  EXPECT_EQ(series, (std::set<std::string>{"motor_boat", "sailing_boat", "macro"}));

  EXPECT_EQ(pr_csv({}), "class,confidence,precision,recall\n");
}

TEST(Table, ReferenceRowFormatting) {
  MetricsReport proposed;
  proposed.macro = {0.89, 0.92, 0.91, 0.90};
  MetricsReport baseline;
  baseline.macro = {0.80, 0.83, 0.83, 0.82};
  const std::vector<ScenarioRow> rows{scenario_row("Actual + Synthetic → Actual", proposed),
                                      scenario_row("Actual → Actual", baseline)};
  EXPECT_EQ(render_metrics_table(rows),
            "| Scenario | mAP@0.5 | Precision | Recall | F1 |\n"
            "|---|---|---|---|---|\n"
            "| Actual + Synthetic → Actual | 0.89 | 0.92 | 0.91 | 0.90 |\n"
            "| Actual → Actual | 0.80 | 0.83 | 0.83 | 0.82 |\n");
}

TEST(Dump, ParsesAndConvertsBoxes) {
  const Dataset d = single_image({gt_box(0, {10, 10, 20, 20})}, 5);
  const DetectionSet s = parse_detection_dump(
      "{\"image_id\":5,\"detections\":[{\"class_id\":0,\"confidence\":0.5,"
      "\"bbox_norm\":[0.2,0.2,0.2,0.2]}],\"depth_used\":6}\n\n",
      d);
  ASSERT_EQ(s.detections.size(), 1u);
  EXPECT_EQ(s.detections[0].image_id, 5);
  EXPECT_NEAR(s.detections[0].bbox.x, 10.0, 1e-9);
  EXPECT_NEAR(s.detections[0].bbox.w, 20.0, 1e-9);
  EXPECT_THROW(parse_detection_dump("{\"image_id\":9,\"detections\":[]}\n", d), Error);
  EXPECT_THROW(parse_detection_dump("not json\n", d), Error);
}

TEST(Dump, NormToPixelsClamps) {
  const BBoxAbs b = norm_to_pixels({0.95, 0.5, 0.2, 0.0}, 100, 50);
  EXPECT_NEAR(b.x, 85.0, 1e-12);
  EXPECT_NEAR(b.w, 15.0, 1e-12);
  EXPECT_EQ(b.h, 0.0);
}
