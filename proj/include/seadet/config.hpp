#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "seadet/augment.hpp"
#include "seadet/dataset.hpp"
#include "seadet/detkernel.hpp"

namespace seadet {

struct DatasetConfig {
  // Manifest path; relative paths resolve against the config file's
  // directory.
  std::filesystem::path manifest;
};

struct AugmentConfig {
  bool enabled = true;
  // Per-class instance targets by class name. Classes not listed keep
  // their current count.
  std::vector<std::pair<std::string, std::size_t>> targets;
  int instances_per_image = 1;
  PlacementConstraint placement;
  int feather = 3;
  std::uint64_t seed = 7;
  std::string output_dir = "augmented";
};

struct SamplerConfig {
  double target_real_fraction = 0.25;
  std::size_t epoch_size = 256;
};

struct EvalConfig {
  // Decoder layers used at inference; 0 means all of them.
  int depth = 0;
};

struct AblationConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

// One JSON document with blocks dataset, augment, sampler, kernel, eval,
// ablation. Every block and key is optional; unknown keys are errors.
struct HarnessConfig {
  DatasetConfig dataset;
  AugmentConfig augment;
  SamplerConfig sampler;
  KernelConfig kernel;
  EvalConfig eval;
  AblationConfig ablation;
  std::filesystem::path base_dir = ".";

  void validate() const;
  std::filesystem::path manifest_path() const;
  int inference_depth() const { return eval.depth == 0 ? kernel.max_depth : eval.depth; }

  static HarnessConfig from_json(const Json& doc, const std::filesystem::path& base_dir = ".");
  static HarnessConfig load(const std::filesystem::path& path);
  // Canonical form; dataset.manifest is written as given.
  Json to_json() const;
};

Json kernel_config_to_json(const KernelConfig& k);
KernelConfig kernel_config_from_json(const Json& block);

// Resolves class-name targets against the dataset's current train counts.
std::vector<std::size_t> resolve_targets(const AugmentConfig& a, const CategoryTable& categories,
                                         std::span<const std::size_t> current);

}  // namespace seadet
