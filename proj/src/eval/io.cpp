#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "seadet/error.hpp"
#include "seadet/eval.hpp"

namespace seadet {
namespace {

std::string class_label(int id, const CategoryTable* categories) {
  if (categories != nullptr && categories->contains(id)) return categories->name(id);
  return std::to_string(id);
}

// Shortest round-trip representation keeps the CSV exact and stable.
std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

BBoxAbs norm_to_pixels(const BBoxNorm& b, int width, int height) {
  const double x0 = std::clamp((b.cx - b.w / 2.0) * width, 0.0, double(width));
  const double y0 = std::clamp((b.cy - b.h / 2.0) * height, 0.0, double(height));
  const double x1 = std::clamp((b.cx + b.w / 2.0) * width, 0.0, double(width));
  const double y1 = std::clamp((b.cy + b.h / 2.0) * height, 0.0, double(height));
  return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

ScenarioRow scenario_row(std::string scenario, const MetricsReport& report) {
  return {std::move(scenario), report.macro.map50, report.macro.precision, report.macro.recall,
          report.macro.f1};
}

std::string pr_csv(std::span<const PRCurve> curves, const CategoryTable* categories) {
  std::string out = "class,confidence,precision,recall\n";
  std::size_t defined = 0;
  for (const auto& c : curves) {
    if (!c.defined) continue;
    ++defined;
    const std::string name = class_label(c.class_id, categories);
    for (const auto& p : c.points) {
      out += fmt::format("{},{},{},{}\n", name, num(p.confidence), num(p.precision),
                         num(p.recall));
    }
  }
  if (defined == 0) return out;
  for (int i = 0; i < kRecallGridPoints; ++i) {
    const double t = i / 100.0;
    double sum = 0.0;
    for (const auto& c : curves) {
      if (c.defined) sum += interpolated_precision(c.points, t);
    }
    out += fmt::format("macro,,{},{}\n", num(sum / static_cast<double>(defined)), num(t));
  }
  return out;
}

void emit_pr_csv(const std::filesystem::path& path, std::span<const PRCurve> curves,
                 const CategoryTable* categories) {
  write_text_file(path, pr_csv(curves, categories));
}

std::string render_metrics_table(std::span<const ScenarioRow> rows) {
  std::string out = "| Scenario | mAP@0.5 | Precision | Recall | F1 |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += fmt::format("| {} | {:.2f} | {:.2f} | {:.2f} | {:.2f} |\n", r.scenario, r.map50,
                       r.precision, r.recall, r.f1);
  }
  return out;
}

DetectionSet parse_detection_dump(std::string_view text, const Dataset& gt) {
  DetectionSet set;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json doc = Json::parse(line);
      const auto image_id = doc.at("image_id").get<std::int64_t>();
      const ImageRecord* img = gt.find(image_id);
      if (img == nullptr) {
        throw Error(ErrorCode::kInvalidArgument,
                    "detection dump references unknown image " + std::to_string(image_id));
      }
      for (const auto& d : doc.at("detections")) {
        const auto& b = d.at("bbox_norm");
        ScoredBox s;
        s.image_id = image_id;
        s.class_id = d.at("class_id").get<int>();
        s.confidence = d.at("confidence").get<double>();
        s.bbox = norm_to_pixels({b.at(0).get<double>(), b.at(1).get<double>(),
                                 b.at(2).get<double>(), b.at(3).get<double>()},
                                img->width, img->height);
        set.detections.push_back(s);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("detection dump line {}: {}", lineno, e.what()));
    }
  }
  set.validate(gt.categories);
  return set;
}

DetectionSet read_detection_dump(const std::filesystem::path& path, const Dataset& gt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_detection_dump(buf.str(), gt);
}

}  // namespace seadet
