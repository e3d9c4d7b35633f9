#include <algorithm>
#include <cmath>

#include "kernel_math.hpp"
#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"

namespace seadet {
namespace {

// Keeps a center-form box inside the unit square.
BBoxNorm clip_unit(double cx, double cy, double w, double h) {
  constexpr double kMinSide = 1e-6;
  double x0 = std::clamp(cx - w / 2, 0.0, 1.0);
  double x1 = std::clamp(cx + w / 2, 0.0, 1.0);
  double y0 = std::clamp(cy - h / 2, 0.0, 1.0);
  double y1 = std::clamp(cy + h / 2, 0.0, 1.0);
  if (x1 - x0 < kMinSide) {
    x0 = std::min(x0, 1.0 - kMinSide);
    x1 = x0 + kMinSide;
  }
  if (y1 - y0 < kMinSide) {
    y0 = std::min(y0, 1.0 - kMinSide);
    y1 = y0 + kMinSide;
  }
  return {(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0};
}

}  // namespace

DecoderWeights DecoderWeights::from_seed(std::uint64_t seed, int channels, int num_classes,
                                         int max_depth) {
  DecoderWeights w;
  for (int l = 0; l < max_depth; ++l) {
    const auto base = 1000 + 10 * static_cast<std::uint64_t>(l);
    w.layers.push_back({Matrix::random(channels, channels, seed, base + 1),
                        Matrix::random(channels, channels, seed, base + 2),
                        Matrix::random(channels, channels, seed, base + 3),
                        Matrix::random(channels, channels, seed, base + 4)});
  }
  w.classifier = Matrix::random(num_classes, channels, seed, 900, 2.0);
  w.class_bias.assign(static_cast<std::size_t>(num_classes), 0.0);
  w.box = Matrix::random(4, channels, seed, 901, 0.5);
  return w;
}

DecoderTrace decode(std::span<const QueryCandidate> candidates,
                    std::span<const std::size_t> selected, const FeaturePyramid& p,
                    const DecoderWeights& w, int depth, const Calibration& calibration) {
  if (depth < 1 || depth > w.max_depth()) {
    throw Error(ErrorCode::kOutOfRange, "decoder depth " + std::to_string(depth) +
                                            " outside [1, " + std::to_string(w.max_depth()) +
                                            "]");
  }
  const int ch = p.maps[0].channels;
  const auto uch = static_cast<std::size_t>(ch);
  const auto num_classes = static_cast<std::size_t>(w.classifier.rows);
  if (!calibration.class_log_prior.empty() && calibration.class_log_prior.size() != num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "class prior size does not match the head");
  }

  // Flattened memory over every pyramid cell.
  std::vector<double> memory;
  memory.reserve(p.cells() * uch);
  for (const auto& m : p.maps) memory.insert(memory.end(), m.values.begin(), m.values.end());
  const std::size_t tokens = p.cells();

  // Queries: content from the selected cell, reference box centred on it.
  const std::size_t k = selected.size();
  std::vector<std::vector<double>> content(k);
  std::vector<std::array<double, 4>> ref(k);
  for (std::size_t q = 0; q < k; ++q) {
    const auto& fi = candidates[selected[q]].feature_index;
    const FeatureMap& m = p.at(fi.level);
    const auto cell = m.cell(fi.y, fi.x);
    content[q].assign(cell.begin(), cell.end());
    ref[q] = {(fi.x + 0.5) / m.width, (fi.y + 0.5) / m.height,
              std::min(0.5, 2.0 / m.width), std::min(0.5, 2.0 / m.height)};
  }

  DecoderTrace trace;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(ch));
  std::vector<double> keys(tokens * uch);
  std::vector<double> values(tokens * uch);
  std::vector<double> query(uch);
  std::vector<double> attn(tokens);
  std::vector<double> mixed(uch);
  for (int l = 0; l < depth; ++l) {
    const DecoderLayerWeights& layer = w.layers[static_cast<std::size_t>(l)];
    for (std::size_t t = 0; t < tokens; ++t) {
      const std::span<const double> x{memory.data() + t * uch, uch};
      layer.key.apply(x, {keys.data() + t * uch, uch});
      layer.value.apply(x, {values.data() + t * uch, uch});
    }
    std::vector<Detection> detections;
    detections.reserve(k);
    for (std::size_t q = 0; q < k; ++q) {
      layer.query.apply(content[q], query);
      for (std::size_t t = 0; t < tokens; ++t) {
        attn[t] = detail::dot(query, {keys.data() + t * uch, uch}) * inv_sqrt;
      }
      detail::softmax(attn);
      for (std::size_t c = 0; c < uch; ++c) mixed[c] = content[q][c];
      for (std::size_t t = 0; t < tokens; ++t) {
        const double* v = values.data() + t * uch;
        for (std::size_t c = 0; c < uch; ++c) mixed[c] += attn[t] * v[c];
      }
      layer.output.apply(mixed, content[q]);
      for (double& v : content[q]) v = std::tanh(v);

      Detection det;
      det.class_scores.resize(num_classes);
      w.classifier.apply(content[q], det.class_scores);
      for (std::size_t c = 0; c < num_classes; ++c) {
        det.class_scores[c] += w.class_bias[c];
        if (!calibration.class_log_prior.empty()) {
          det.class_scores[c] += calibration.class_log_prior[c];
        }
      }
      detail::softmax(det.class_scores);
      const auto best = std::max_element(det.class_scores.begin(), det.class_scores.end());
      det.class_id = static_cast<int>(best - det.class_scores.begin());
      det.confidence = *best;

      std::array<double, 4> delta{};
      w.box.apply(content[q], delta);
      for (std::size_t i = 0; i < 4; ++i) {
        ref[q][i] = detail::sigmoid(detail::logit(ref[q][i]) + 0.5 * delta[i]);
      }
      det.bbox = clip_unit(ref[q][0], ref[q][1], ref[q][2], ref[q][3]);
      detections.push_back(std::move(det));
    }
    trace.layers.push_back(std::move(detections));
  }
  return trace;
}

Json detection_dump_line(std::int64_t image_id, std::span<const Detection> detections,
                         int depth_used) {
  Json dets = Json::array();
  for (const auto& d : detections) {
    dets.push_back({{"class_id", d.class_id},
                    {"confidence", d.confidence},
                    {"bbox_norm", {d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h}}});
  }
  return Json{{"image_id", image_id}, {"detections", dets}, {"depth_used", depth_used}};
}

}  // namespace seadet
