#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seadet/dataset.hpp"
#include "seadet/raster.hpp"

namespace seadet {

enum class Level { kS3 = 0, kS4 = 1, kS5 = 2 };
inline constexpr std::array<Level, 3> kAllLevels = {Level::kS3, Level::kS4, Level::kS5};
inline constexpr int stride_of(Level l) { return 8 << static_cast<int>(l); }
inline std::size_t index_of(Level l) { return static_cast<std::size_t>(l); }

// Dense row-major matrix used for the kernel's fixed projections.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols + c];
  }

  // Entries ~ N(0, scale^2 / cols), drawn from stream (seed, tag).
  static Matrix random(int rows, int cols, std::uint64_t seed, std::uint64_t tag,
                       double scale = 1.0);

  // out = this * x
  void apply(std::span<const double> x, std::span<double> out) const;
};

struct FeatureMap {
  Level level = Level::kS3;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;  // (y * width + x) * channels + c

  FeatureMap() = default;
  FeatureMap(Level l, int h, int w, int c)
      : level(l), height(h), width(w), channels(c),
        values(static_cast<std::size_t>(h) * w * c, 0.0) {}

  std::size_t cells() const { return static_cast<std::size_t>(height) * width; }
  std::span<double> cell(int y, int x) {
    return {values.data() + (static_cast<std::size_t>(y) * width + x) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const double> cell(int y, int x) const {
    return {values.data() + (static_cast<std::size_t>(y) * width + x) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const double> token(std::size_t i) const {
    return {values.data() + i * channels, static_cast<std::size_t>(channels)};
  }

  bool operator==(const FeatureMap&) const = default;
};

struct FeaturePyramid {
  std::array<FeatureMap, 3> maps;

  const FeatureMap& at(Level l) const { return maps[index_of(l)]; }
  FeatureMap& at(Level l) { return maps[index_of(l)]; }
  std::size_t cells() const;
  bool operator==(const FeaturePyramid&) const = default;
};

// Per-cell descriptor width fed to the backbone projection: four quadrant
// RGB means plus the per-channel standard deviation of the cell.
inline constexpr int kDescriptorSize = 15;

// Seeded random-projection stand-in for a backbone. Map sizes are
// ceil(image_dim / stride) for strides 8/16/32.
FeaturePyramid build_pyramid(const RgbImage& image, std::uint64_t seed, int channels);

struct AttentionWeights {
  Matrix query;
  Matrix key;
  Matrix value;

  static AttentionWeights from_seed(std::uint64_t seed, std::uint64_t tag, int channels);
};

struct AttentionOutput {
  FeatureMap features;
  Matrix weights;  // tokens x tokens, rows sum to 1
};

// Single-head self-attention over the flattened map. No positional term,
// no residual.
AttentionOutput intra_scale_attention(const FeatureMap& m, const AttentionWeights& w);

struct FusionWeights {
  // top_down[0] mixes S4, top_down[1] mixes S3;
  // bottom_up[0] mixes S4, bottom_up[1] mixes S5.
  std::array<Matrix, 2> top_down;
  std::array<Matrix, 2> bottom_up;

  static FusionWeights from_seed(std::uint64_t seed, int channels);
};

// Nearest-neighbour 2x upsampling cropped to (height, width).
FeatureMap upsample2(const FeatureMap& coarse, Level level, int height, int width);
// 2x2 average pooling (partial windows average their existing cells).
FeatureMap downsample2(const FeatureMap& fine, Level level);

// Top-down half of the fusion: S5 unchanged, S4 and S3 receive the
// upsampled coarser level before mixing.
FeaturePyramid top_down_pass(const FeaturePyramid& p, const FusionWeights& w);
// Top-down followed by bottom-up. With enabled = false returns p unchanged.
FeaturePyramid cross_scale_fuse(const FeaturePyramid& p, const FusionWeights& w,
                                bool enabled = true);

struct FeatureIndex {
  Level level = Level::kS3;
  int y = 0;
  int x = 0;

  auto operator<=>(const FeatureIndex&) const = default;
};

struct QueryCandidate {
  FeatureIndex feature_index;
  std::vector<double> class_scores;
  double localization_score = 0.0;
  double uncertainty = 0.0;

  double max_class_score() const;
};

// |localization - max class probability|
double query_uncertainty(double localization_score, double max_class_score);

struct ScoreHead {
  Matrix classifier;
  std::vector<double> class_bias;
  std::vector<double> localization;
  double localization_bias = 0.0;

  static ScoreHead from_seed(std::uint64_t seed, int channels, int num_classes);
};

// One candidate per feature cell, ordered by (level, y, x).
std::vector<QueryCandidate> score_candidates(const FeaturePyramid& p, const ScoreHead& head);

// Selection utility: max class score - lambda_u * uncertainty.
double selection_utility(const QueryCandidate& c, double lambda_u);

// Top-k candidate indices by utility, descending; ties go to the lower
// (level, y, x) index.
std::vector<std::size_t> select_queries(std::span<const QueryCandidate> candidates,
                                        std::size_t k, double lambda_u);

struct Detection {
  BBoxNorm bbox;
  int class_id = 0;
  double confidence = 0.0;
  // Full class distribution; used by the matching cost when present.
  std::vector<double> class_scores;

  bool operator==(const Detection&) const = default;
};

struct DecoderTrace {
  std::vector<std::vector<Detection>> layers;

  bool operator==(const DecoderTrace&) const = default;
};

struct DecoderLayerWeights {
  Matrix query;
  Matrix key;
  Matrix value;
  Matrix output;
};

struct DecoderWeights {
  std::vector<DecoderLayerWeights> layers;
  Matrix classifier;
  std::vector<double> class_bias;
  Matrix box;

  int max_depth() const { return static_cast<int>(layers.size()); }
  static DecoderWeights from_seed(std::uint64_t seed, int channels, int num_classes,
                                  int max_depth);
};

// Additive adjustments applied at inference; the default is neutral.
struct Calibration {
  std::array<double, 3> input_mean{0.0, 0.0, 0.0};
  std::vector<double> class_log_prior;  // empty = no prior
};

// Iterative refinement through the first `depth` layers. Each layer
// cross-attends the queries to every pyramid cell and emits one Detection
// per query through the shared head.
DecoderTrace decode(std::span<const QueryCandidate> candidates,
                    std::span<const std::size_t> selected, const FeaturePyramid& p,
                    const DecoderWeights& w, int depth, const Calibration& calibration = {});

struct MatchCosts {
  double w_cls = 1.0;
  double w_l1 = 5.0;
  double w_giou = 2.0;

  bool operator==(const MatchCosts&) const = default;
};

struct GroundTruthBox {
  int class_id = 0;
  BBoxNorm bbox;
};

double generalized_iou(const BBoxNorm& a, const BBoxNorm& b);

// Rows are ground truth, columns predictions.
Matrix matching_cost_matrix(std::span<const Detection> preds,
                            std::span<const GroundTruthBox> gt, const MatchCosts& costs);

struct Assignment {
  std::vector<std::size_t> column_for_row;
  double total_cost = 0.0;  // summed in row order
};

// Minimum-cost assignment of every row to a distinct column (rows <= cols).
Assignment solve_assignment(const Matrix& cost);

// Optimal one-to-one matching of ground truth to predictions.
Assignment match_predictions(std::span<const Detection> preds,
                             std::span<const GroundTruthBox> gt, const MatchCosts& costs);

std::vector<GroundTruthBox> ground_truth_of(const ImageRecord& image);

struct KernelConfig {
  int channels = 16;
  int num_queries = 30;
  int max_depth = 6;
  double lambda_u = 1.0;
  MatchCosts costs;
  std::uint64_t backbone_seed = 11;
  std::uint64_t encoder_seed = 17;
  std::uint64_t head_seed = 23;
  std::uint64_t decoder_seed = 37;
  int num_classes = 3;
  bool fusion_enabled = true;
  bool uncertainty_query_enabled = true;

  void validate() const;
  bool operator==(const KernelConfig&) const = default;
};

struct ForwardResult {
  std::vector<std::size_t> selected;
  DecoderTrace trace;

  const std::vector<Detection>& final_detections() const { return trace.layers.back(); }
};

// Fixed weights built once from the config seeds; immutable and safe to
// share across threads.
class DetKernel {
 public:
  explicit DetKernel(KernelConfig config);

  const KernelConfig& config() const { return config_; }
  double effective_lambda() const;

  // Pyramid -> S5 self-attention -> cross-scale fusion (if enabled) ->
  // candidate scoring -> query selection -> decoding to `depth` layers.
  ForwardResult forward(const RgbImage& image, int depth,
                        const Calibration& calibration = {}) const;

  const AttentionWeights& attention() const { return attention_; }
  const FusionWeights& fusion() const { return fusion_; }
  const ScoreHead& score_head() const { return head_; }
  const DecoderWeights& decoder() const { return decoder_; }

 private:
  KernelConfig config_;
  AttentionWeights attention_;
  FusionWeights fusion_;
  ScoreHead head_;
  DecoderWeights decoder_;
};

// Subtracts a per-channel mean from every pixel.
RgbImage center_image(const RgbImage& image, const std::array<double, 3>& mean);

// One JSON line per image: {image_id, detections: [{class_id, confidence,
// bbox_norm}], depth_used}.
Json detection_dump_line(std::int64_t image_id, std::span<const Detection> detections,
                         int depth_used);

}  // namespace seadet
