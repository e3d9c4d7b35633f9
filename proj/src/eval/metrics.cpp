#include <algorithm>

#include "seadet/error.hpp"
#include "seadet/eval.hpp"

namespace seadet {

double interpolated_precision(std::span<const PRPoint> points, double r) {
  double best = 0.0;
  for (const auto& p : points) {
    if (p.recall >= r) best = std::max(best, p.precision);
  }
  return best;
}

double interpolated_ap(std::span<const PRPoint> points) {
  // Suffix maximum of precision, so each grid point is a binary search.
  std::vector<double> envelope(points.size());
  double run = 0.0;
  for (std::size_t i = points.size(); i-- > 0;) {
    run = std::max(run, points[i].precision);
    envelope[i] = run;
  }
  double sum = 0.0;
  for (int i = 0; i < kRecallGridPoints; ++i) {
    const double t = i / 100.0;
    auto it = std::lower_bound(points.begin(), points.end(), t,
                               [](const PRPoint& p, double v) { return p.recall < v; });
    if (it != points.end()) sum += envelope[static_cast<std::size_t>(it - points.begin())];
  }
  return sum / kRecallGridPoints;
}

PRCurve pr_curve(const MatchResult& matches, int class_id) {
  PRCurve curve;
  curve.class_id = class_id;
  if (class_id >= 0 && static_cast<std::size_t>(class_id) < matches.support.size()) {
    curve.support = matches.support[class_id];
  }
  curve.defined = curve.support > 0;
  if (!curve.defined) return curve;

  std::size_t tp = 0;
  std::size_t fp = 0;
  const double total = static_cast<double>(curve.support);
  for (std::size_t k : evaluation_order(matches.detections)) {
    const auto& d = matches.detections[k];
    if (d.class_id != class_id) continue;
    matches.true_positive[k] ? ++tp : ++fp;
    curve.points.push_back({static_cast<double>(tp) / total,
                            static_cast<double>(tp) / static_cast<double>(tp + fp),
                            d.confidence});
  }
  curve.ap = interpolated_ap(curve.points);
  return curve;
}

std::vector<PRCurve> pr_curves(const MatchResult& matches) {
  std::vector<PRCurve> out;
  for (std::size_t c = 0; c < matches.support.size(); ++c) {
    out.push_back(pr_curve(matches, static_cast<int>(c)));
  }
  return out;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace {

struct Tally {
  std::vector<std::size_t> tp;
  std::vector<std::size_t> fp;
};

PointMetrics from_tally(const Tally& t, std::span<const std::size_t> support) {
  PointMetrics m;
  m.precision.assign(support.size(), 0.0);
  m.recall.assign(support.size(), 0.0);
  std::size_t supported = 0;
  for (std::size_t c = 0; c < support.size(); ++c) {
    const std::size_t n = t.tp[c] + t.fp[c];
    m.precision[c] = n > 0 ? static_cast<double>(t.tp[c]) / static_cast<double>(n) : 0.0;
    if (support[c] == 0) continue;
    m.recall[c] = static_cast<double>(t.tp[c]) / static_cast<double>(support[c]);
    m.macro_precision += m.precision[c];
    m.macro_recall += m.recall[c];
    ++supported;
  }
  if (supported > 0) {
    m.macro_precision /= static_cast<double>(supported);
    m.macro_recall /= static_cast<double>(supported);
  }
  return m;
}

bool known_class(const MatchResult& m, int c) {
  return c >= 0 && static_cast<std::size_t>(c) < m.support.size();
}

}  // namespace

PointMetrics metrics_at_threshold(const MatchResult& matches, double threshold) {
  Tally t{std::vector<std::size_t>(matches.support.size(), 0),
          std::vector<std::size_t>(matches.support.size(), 0)};
  for (std::size_t k = 0; k < matches.detections.size(); ++k) {
    const auto& d = matches.detections[k];
    if (!known_class(matches, d.class_id) || d.confidence < threshold) continue;
    matches.true_positive[k] ? ++t.tp[d.class_id] : ++t.fp[d.class_id];
  }
  return from_tally(t, matches.support);
}

MetricsReport report(const MatchResult& matches, std::span<const PRCurve> curves) {
  MetricsReport r;
  const std::size_t n = matches.support.size();
  std::size_t supported = 0;
  for (std::size_t c = 0; c < n; ++c) {
    ClassMetrics cm;
    cm.class_id = static_cast<int>(c);
    cm.support = matches.support[c];
    cm.supported = cm.support > 0;
    if (cm.supported) {
      auto it = std::find_if(curves.begin(), curves.end(),
                             [&](const PRCurve& pc) { return pc.class_id == cm.class_id; });
      if (it == curves.end() || !it->defined) {
        throw Error(ErrorCode::kInvalidArgument,
                    "missing PR curve for supported class " + std::to_string(c));
      }
      cm.ap = it->ap;
      r.macro.map50 += cm.ap;
      ++supported;
    }
    r.per_class.push_back(cm);
  }
  if (supported == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no class has ground-truth support");
  }
  r.macro.map50 /= static_cast<double>(supported);

  // Sweep thresholds in descending confidence; a threshold admits every
  // detection at or above it, so candidates are evaluated only where the
  // confidence changes.
  Tally t{std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, 0)};
  const auto order = evaluation_order(matches.detections);
  double best_f1 = -1.0;
  double best_conf = 0.0;
  PointMetrics best;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& d = matches.detections[order[i]];
    if (known_class(matches, d.class_id)) {
      matches.true_positive[order[i]] ? ++t.tp[d.class_id] : ++t.fp[d.class_id];
    }
    const bool boundary = i + 1 == order.size() ||
                          matches.detections[order[i + 1]].confidence != d.confidence;
    if (!boundary) continue;
    PointMetrics m = from_tally(t, matches.support);
    const double f = f1_score(m.macro_precision, m.macro_recall);
    if (f > best_f1) {
      best_f1 = f;
      best_conf = d.confidence;
      best = std::move(m);
    }
  }
  if (best_f1 < 0.0) best = from_tally(t, matches.support);

  r.confidence_at_max_f1 = best_conf;
  r.macro.precision = best.macro_precision;
  r.macro.recall = best.macro_recall;
  r.macro.f1 = f1_score(best.macro_precision, best.macro_recall);
  for (auto& cm : r.per_class) {
    const auto c = static_cast<std::size_t>(cm.class_id);
    cm.precision = best.precision[c];
    cm.recall = best.recall[c];
    cm.f1 = f1_score(cm.precision, cm.recall);
  }
  return r;
}

Json MetricsReport::to_json(const CategoryTable& categories) const {
  Json classes = Json::array();
  for (const auto& c : per_class) {
    classes.push_back(Json{{"class", categories.contains(c.class_id)
                                         ? categories.name(c.class_id)
                                         : std::to_string(c.class_id)},
                           {"class_id", c.class_id},
                           {"supported", c.supported},
                           {"support", c.support},
                           {"ap", c.ap},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1}});
  }
  return Json{{"iou_threshold", kIouThreshold},
              {"confidence_at_max_f1", confidence_at_max_f1},
              {"macro",
               {{"map50", macro.map50},
                {"precision", macro.precision},
                {"recall", macro.recall},
                {"f1", macro.f1}}},
              {"per_class", std::move(classes)}};
}

MetricsReport MetricsReport::from_json(const Json& doc, const CategoryTable& categories) {
  MetricsReport r;
  try {
    r.confidence_at_max_f1 = doc.at("confidence_at_max_f1").get<double>();
    const auto& m = doc.at("macro");
    r.macro = {m.at("map50").get<double>(), m.at("precision").get<double>(),
               m.at("recall").get<double>(), m.at("f1").get<double>()};
    for (const auto& c : doc.at("per_class")) {
      ClassMetrics cm;
      cm.class_id = c.at("class_id").get<int>();
      if (!categories.contains(cm.class_id)) {
        throw Error(ErrorCode::kInvalidArgument, "metrics report names an unknown class");
      }
      cm.supported = c.at("supported").get<bool>();
      cm.support = c.at("support").get<std::size_t>();
      cm.ap = c.at("ap").get<double>();
      cm.precision = c.at("precision").get<double>();
      cm.recall = c.at("recall").get<double>();
      cm.f1 = c.at("f1").get<double>();
      r.per_class.push_back(cm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

}  // namespace seadet
