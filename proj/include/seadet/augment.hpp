#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seadet/dataset.hpp"
#include "seadet/raster.hpp"
#include "seadet/rng.hpp"

namespace seadet {

// Smallest patch side, in pixels, eligible for copy-paste.
inline constexpr int kMinPatchSide = 8;

// A cropped object with a feathered alpha mask in channel 3.
struct InstancePatch {
  RgbaImage pixels;
  int source_class = 0;
  std::int64_t source_image_id = 0;
  Domain source_domain = Domain::kReal;
  int alpha_feather = 0;

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
};

struct PlacementConstraint {
  double max_overlap_iou = 0.05;
  // Pasted boxes must have their top edge at or below this fraction of the
  // image height.
  double horizon_fraction = 0.35;
  int max_attempts = 50;
  double scale_min = 0.8;
  double scale_max = 1.2;

  void validate() const;
};

struct ClassPlan {
  int class_id = 0;
  std::size_t current = 0;
  std::size_t target = 0;
  std::size_t deficit = 0;
  std::size_t images_to_generate = 0;

  bool operator==(const ClassPlan&) const = default;
};

struct AugmentPlan {
  std::vector<ClassPlan> classes;
  int instances_per_image = 1;

  std::size_t total_images() const;
  Json to_json(const CategoryTable& categories) const;
};

// deficit = max(0, target - current); images = ceil(deficit / per_image).
AugmentPlan plan_rebalance(std::span<const std::size_t> current,
                           std::span<const std::size_t> targets,
                           int instances_per_image = 1);

struct PhotometricParams {
  double brightness_delta = 0.0;  // [-0.2, 0.2]
  double contrast_scale = 1.0;    // [0.8, 1.2]

  void validate() const;
};

using ImageLoader = std::function<std::optional<RgbImage>(const ImageRecord&)>;
using ImageWriter = std::function<void(const ImageRecord&, const RgbImage&)>;

// Reads ImageRecord::file_path from disk.
ImageLoader file_image_loader();
// Writes to ImageRecord::file_path as PNG.
ImageWriter file_image_writer();

// Alpha for a pixel `distance` px from the nearest patch border.
float feather_alpha(int distance, int feather);

// Crops `box` out of `source` with a feathered alpha border.
RgbaImage crop_patch(const RgbImage& source, const BBoxAbs& box, int feather);

struct PatchExtraction {
  std::vector<InstancePatch> patches;
  std::size_t skipped_small = 0;
  std::size_t skipped_unreadable = 0;
  std::vector<std::string> warnings;
};

// One patch per annotation of a class in `classes`, in image then
// annotation order. Boxes under kMinPatchSide on either side are skipped.
PatchExtraction extract_instances(const Dataset& d, const std::set<int>& classes,
                                  int feather, const ImageLoader& loader);

struct Placement {
  int x = 0;
  int y = 0;
  double scale = 1.0;
  int width = 0;
  int height = 0;

  BBoxAbs box() const { return {double(x), double(y), double(width), double(height)}; }
  bool operator==(const Placement&) const = default;
};

// Patch extent after scaling; never below one pixel.
int scaled_extent(int extent, double scale);

// Rejection-samples a placement for a patch_width x patch_height patch.
// Returns nullopt when max_attempts draws all fail. Throws when the
// background is not a training image.
std::optional<Placement> place_instance(const ImageRecord& background, int patch_width,
                                        int patch_height,
                                        std::span<const BBoxAbs> occupied,
                                        const PlacementConstraint& c, RngStream& rng);

// Uses the background's own annotations as the occupied set.
std::optional<Placement> place_instance(const ImageRecord& background,
                                        const InstancePatch& patch,
                                        const PlacementConstraint& c, RngStream& rng);

// rotation_deg must be one of {-10, 0, 10}. Order: flip, rotate, photometric.
InstancePatch transform_patch(const InstancePatch& patch, bool flip, int rotation_deg,
                              const PhotometricParams& photo);

struct CompositeResult {
  RgbImage raster;
  Annotation annotation;
};

// Alpha-blends the (resized) patch at the placement.
CompositeResult composite(const RgbImage& background, const InstancePatch& patch,
                          const Placement& placement, int instance_id = 0);

struct ClassAugmentReport {
  int class_id = 0;
  std::size_t deficit = 0;
  std::size_t generated_images = 0;
  std::size_t generated_instances = 0;
  std::size_t rejected_placements = 0;
  std::size_t skipped_patches = 0;
};

struct AugmentReport {
  std::vector<ClassAugmentReport> classes;

  Json to_json(const CategoryTable& categories) const;
};

struct AugmentOptions {
  int feather = 3;
  // Generated files are named output_dir/aug_{class}_{index:06}.png.
  std::filesystem::path output_dir = "augmented";
  ImageLoader loader = file_image_loader();
  ImageWriter writer = file_image_writer();
  int jobs = 1;
  // Backgrounds tried per generated image before giving up.
  int max_backgrounds = 32;
};

struct AugmentResult {
  Dataset dataset;
  AugmentReport report;
};

// Copy-paste rebalancing of the training split. Each generated image is a
// same-domain training background with instances_per_image pastes of one
// class; it keeps the background's own annotations. Val/test records are
// passed through untouched. Deterministic in (d, plan, c, seed).
AugmentResult run_augmentation(const Dataset& d, const AugmentPlan& plan,
                               const PlacementConstraint& c, std::uint64_t seed,
                               const AugmentOptions& options = {});

struct PlacementViolation {
  std::int64_t image_id = 0;
  int instance_id = 0;
  std::string reason;
};

// Re-checks every pasted annotation in augmented images against bounds,
// horizon and overlap with all annotations that precede it.
std::vector<PlacementViolation> verify_placements(const Dataset& d,
                                                  const PlacementConstraint& c);

}  // namespace seadet
