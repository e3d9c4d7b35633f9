#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "seadet/config.hpp"
#include "seadet/dataset.hpp"
#include "seadet/detkernel.hpp"
#include "seadet/eval.hpp"
#include "seadet/sampler.hpp"

namespace seadet {

struct VariantConfig {
  bool fusion = false;
  bool query_init = false;
  bool weighting = false;
  std::string label;

  std::string display_name() const;
  Json to_json() const;
  bool operator==(const VariantConfig&) const = default;
};

// "baseline", "full", or the enabled flags joined by '+'.
std::string variant_label(bool fusion, bool query_init, bool weighting);

// The 2^3 flag grid in table order: baseline, the three singles, the
// three pairs, full.
std::vector<VariantConfig> enumerate_variants();

// Everything a run reads from the dataset, computed once and shared
// read-only between workers.
struct PreparedData {
  const Dataset* dataset = nullptr;
  std::string dataset_fingerprint;
  std::string test_fingerprint;
  std::vector<std::int64_t> test_ids;
  std::vector<RgbImage> test_images;
  // Mean RGB and per-class instance counts for every training image.
  std::unordered_map<std::int64_t, std::array<double, 3>> train_mean;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> train_class_counts;
};

// Loads test and training images through `loader` (files by default).
PreparedData prepare_data(const Dataset& d, int jobs = 1,
                          const ImageLoader& loader = file_image_loader());

// Kernel for one run: the configured kernel with the variant's fusion and
// query flags, and every weight seed mixed with the run seed.
KernelConfig kernel_config_for(const VariantConfig& v, std::uint64_t seed,
                               const KernelConfig& base);

// Domain weights for one run: target-ratio weights with weighting on,
// uniform weights with it off.
DomainWeights sampler_weights_for(const VariantConfig& v, const DomainCounts& counts,
                                  const SamplerConfig& s);

// Class log prior (add-one smoothed, zero mean) and mean input colour of
// the scheduled training images.
Calibration calibration_from_schedule(const SampleSchedule& schedule, const PreparedData& data,
                                      std::size_t num_classes);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
  std::vector<PRCurve> curves;
  DomainWeights weights;
};

// sampler -> calibration -> kernel forward on the test split -> evalkit.
// Failures are caught and reported in the outcome.
SeedOutcome run_seed(const VariantConfig& v, std::uint64_t seed, const PreparedData& data,
                     const HarnessConfig& config);

struct VariantRun {
  VariantConfig variant;
  std::vector<SeedOutcome> seeds;
  Json manifest;
};

// Timestamp for manifests: SOURCE_DATE_EPOCH when set, else the clock.
std::string manifest_timestamp();

Json run_manifest(const VariantConfig& v, std::span<const SeedOutcome> seeds,
                  const PreparedData& data, const HarnessConfig& config,
                  const std::string& timestamp);

// Manifest with timestamps and the variant label removed; two runs of the
// same config differ here only in the three flags.
Json comparable_manifest(const Json& manifest);

VariantRun run_variant(const VariantConfig& v, const PreparedData& data,
                       std::span<const std::uint64_t> seeds, const HarnessConfig& config,
                       int jobs = 1);

struct AblationRow {
  VariantConfig variant;
  std::size_t n_seeds = 0;
  double mean_map50 = 0.0;
  double std_map50 = 0.0;  // population
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  // Mean of the per-run F1 values, and F1 of the mean P and R.
  double mean_f1 = 0.0;
  double f1_of_means = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  Json to_json() const;
  std::string to_csv() const;
};

// One row per variant in table order over the successful seeds. Throws
// when a variant is missing or has no successful seed.
AblationTable aggregate(std::span<const VariantRun> runs);

// Markdown: Variant | Fusion | Query Init. | Weighting | mAP@0.5 under a
// header note on how to read desk-scale numbers.
std::string render_ablation_table(const AblationTable& table);

struct AblationResult {
  Dataset dataset;
  std::vector<VariantRun> runs;
  AblationTable table;
};

// Full grid: optional augmentation of the configured dataset, then every
// variant x seed as an independent job. Writes manifests, per-seed
// reports and the aggregate under `artifacts`.
AblationResult run_ablation(const HarnessConfig& config, std::span<const std::uint64_t> seeds,
                            const std::filesystem::path& artifacts, int jobs = 1);

// Augments `d` per the config's augment block. Returns d unchanged when
// augmentation is disabled or nothing is in deficit.
AugmentResult augment_from_config(const Dataset& d, const HarnessConfig& config,
                                  std::uint64_t seed, const std::filesystem::path& output_dir,
                                  int jobs = 1);

}  // namespace seadet
