#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"

namespace seadet {

void KernelConfig::validate() const {
  if (channels < 1) throw Error(ErrorCode::kConfig, "kernel.channels must be >= 1");
  if (num_queries < 1) throw Error(ErrorCode::kConfig, "kernel.num_queries must be >= 1");
  if (max_depth < 1) throw Error(ErrorCode::kConfig, "kernel.max_depth must be >= 1");
  if (!(lambda_u >= 0.0)) throw Error(ErrorCode::kConfig, "kernel.lambda_u must be >= 0");
  if (num_classes < 1) throw Error(ErrorCode::kConfig, "kernel.num_classes must be >= 1");
  if (costs.w_cls < 0 || costs.w_l1 < 0 || costs.w_giou < 0) {
    throw Error(ErrorCode::kConfig, "matching cost weights must be >= 0");
  }
}

DetKernel::DetKernel(KernelConfig config) : config_(std::move(config)) {
  config_.validate();
  attention_ = AttentionWeights::from_seed(config_.encoder_seed, 1, config_.channels);
  fusion_ = FusionWeights::from_seed(config_.encoder_seed, config_.channels);
  head_ = ScoreHead::from_seed(config_.head_seed, config_.channels, config_.num_classes);
  decoder_ = DecoderWeights::from_seed(config_.decoder_seed, config_.channels,
                                       config_.num_classes, config_.max_depth);
}

double DetKernel::effective_lambda() const {
  return config_.uncertainty_query_enabled ? config_.lambda_u : 0.0;
}

ForwardResult DetKernel::forward(const RgbImage& image, int depth,
                                 const Calibration& calibration) const {
  const bool centered = calibration.input_mean != std::array<double, 3>{0.0, 0.0, 0.0};
  FeaturePyramid pyramid =
      build_pyramid(centered ? center_image(image, calibration.input_mean) : image,
                    config_.backbone_seed, config_.channels);
  pyramid.at(Level::kS5) = intra_scale_attention(pyramid.at(Level::kS5), attention_).features;
  const FeaturePyramid fused = cross_scale_fuse(pyramid, fusion_, config_.fusion_enabled);
  const auto candidates = score_candidates(fused, head_);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config_.num_queries),
                                              candidates.size());
  ForwardResult result;
  result.selected = select_queries(candidates, k, effective_lambda());
  result.trace = decode(candidates, result.selected, fused, decoder_, depth, calibration);
  return result;
}

}  // namespace seadet
