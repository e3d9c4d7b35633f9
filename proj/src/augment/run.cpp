#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <map>

#include "seadet/augment.hpp"
#include "seadet/error.hpp"
#include "seadet/eval.hpp"
#include "seadet/parallel.hpp"

namespace seadet {
namespace {

constexpr std::array<int, 3> kRotations = {-10, 0, 10};

struct Job {
  int class_id = 0;
  std::size_t class_index = 0;  // index within the class, used in file names
};

struct JobOutput {
  ImageRecord record;
  std::size_t rejected = 0;
};

}  // namespace

Json AugmentReport::to_json(const CategoryTable& categories) const {
  Json out = Json::object();
  for (const auto& c : classes) {
    out[categories.name(c.class_id)] = {{"deficit", c.deficit},
                                        {"generated_images", c.generated_images},
                                        {"generated_instances", c.generated_instances},
                                        {"rejected_placements", c.rejected_placements},
                                        {"skipped_patches", c.skipped_patches}};
  }
  return out;
}

AugmentResult run_augmentation(const Dataset& d, const AugmentPlan& plan,
                               const PlacementConstraint& c, std::uint64_t seed,
                               const AugmentOptions& options) {
  c.validate();
  if (plan.instances_per_image < 1) {
    throw Error(ErrorCode::kInvalidArgument, "instances_per_image must be >= 1");
  }
  for (const auto& cp : plan.classes) {
    if (!d.categories.contains(cp.class_id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "plan references unknown class " + std::to_string(cp.class_id));
    }
  }

  AugmentResult result;
  result.dataset = d;
  std::map<int, ClassAugmentReport> reports;
  for (const auto& cp : plan.classes) {
    reports[cp.class_id] = {cp.class_id, cp.deficit, 0, 0, 0, 0};
  }

  // Source material: original training images only.
  Dataset train;
  train.categories = d.categories;
  for (const auto& image : d.images) {
    if (image.split == Split::kTrain && image.domain != Domain::kAugmented) {
      train.images.push_back(image);
    }
  }
  std::array<std::vector<const ImageRecord*>, 3> backgrounds;
  for (const auto& image : train.images) backgrounds[index_of(image.domain)].push_back(&image);

  std::set<int> deficit_classes;
  for (const auto& cp : plan.classes) {
    if (cp.images_to_generate > 0) deficit_classes.insert(cp.class_id);
  }
  if (deficit_classes.empty()) {
    result.report.classes.reserve(reports.size());
    for (auto& [id, r] : reports) result.report.classes.push_back(r);
    return result;
  }

  PatchExtraction extraction =
      extract_instances(train, deficit_classes, options.feather, options.loader);
  std::map<int, std::vector<const InstancePatch*>> pools;
  for (const auto& p : extraction.patches) pools[p.source_class].push_back(&p);
  for (const auto& image : train.images) {
    for (const auto& ann : image.annotations) {
      if (deficit_classes.count(ann.category_id) &&
          (ann.bbox.w < kMinPatchSide || ann.bbox.h < kMinPatchSide)) {
        ++reports[ann.category_id].skipped_patches;
      }
    }
  }
  for (int cls : deficit_classes) {
    if (pools[cls].empty()) {
      throw Error(ErrorCode::kEmptyPatchPool,
                  "no usable training instances of class '" + d.categories.name(cls) + "'");
    }
  }

  std::vector<Job> jobs;
  for (const auto& cp : plan.classes) {
    for (std::size_t i = 0; i < cp.images_to_generate; ++i) jobs.push_back({cp.class_id, i});
  }
  const std::int64_t first_id = d.next_image_id();
  std::vector<JobOutput> outputs(jobs.size());

  parallel_for(jobs.size(), options.jobs, [&](std::size_t g) {
    const Job& job = jobs[g];
    RngStream rng(seed, g);
    const auto& pool = pools.at(job.class_id);
    JobOutput& out = outputs[g];

    for (int attempt = 0; attempt < options.max_backgrounds; ++attempt) {
      const InstancePatch* first =
          pool[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(pool.size()) - 1))];
      const auto& candidates = backgrounds[index_of(first->source_domain)];
      const ImageRecord& bg = *candidates[static_cast<std::size_t>(
          rng.uniform_int(0, std::int64_t(candidates.size()) - 1))];

      std::vector<const InstancePatch*> same_domain;
      for (const InstancePatch* p : pool) {
        if (p->source_domain == first->source_domain) same_domain.push_back(p);
      }

      auto raster = options.loader(bg);
      if (!raster) continue;
      std::vector<BBoxAbs> occupied;
      int next_instance = 0;
      for (const auto& ann : bg.annotations) {
        occupied.push_back(ann.bbox);
        next_instance = std::max(next_instance, ann.instance_id + 1);
      }
      ImageRecord record;
      record.width = bg.width;
      record.height = bg.height;
      record.annotations = bg.annotations;

      bool placed_all = true;
      for (int k = 0; k < plan.instances_per_image; ++k) {
        const InstancePatch* source =
            k == 0 ? first
                   : same_domain[static_cast<std::size_t>(
                         rng.uniform_int(0, std::int64_t(same_domain.size()) - 1))];
        const bool flip = rng.coin();
        const int rotation = kRotations[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        PhotometricParams photo{rng.uniform(-0.2, 0.2), rng.uniform(0.8, 1.2)};
        const InstancePatch patch = transform_patch(*source, flip, rotation, photo);
        const auto placement =
            place_instance(bg, patch.width(), patch.height(), occupied, c, rng);
        if (!placement) {
          ++out.rejected;
          placed_all = false;
          break;
        }
        CompositeResult comp = composite(*raster, patch, *placement, next_instance++);
        *raster = std::move(comp.raster);
        occupied.push_back(comp.annotation.bbox);
        record.annotations.push_back(comp.annotation);
      }
      if (!placed_all) continue;

      record.image_id = first_id + static_cast<std::int64_t>(g);
      record.domain = Domain::kAugmented;
      record.split = Split::kTrain;
      record.file_path = (options.output_dir /
                          fmt::format("aug_{}_{:06}.png", d.categories.name(job.class_id),
                                      job.class_index))
                             .string();
      if (options.writer) options.writer(record, *raster);
      out.record = std::move(record);
      return;
    }
    throw Error(ErrorCode::kPlacementFailed,
                fmt::format("no valid placement for class '{}' image {} after {} backgrounds",
                            d.categories.name(job.class_id), job.class_index,
                            options.max_backgrounds));
  });

  for (std::size_t g = 0; g < jobs.size(); ++g) {
    auto& r = reports[jobs[g].class_id];
    r.rejected_placements += outputs[g].rejected;
    ++r.generated_images;
    for (const auto& ann : outputs[g].record.annotations) {
      if (ann.source == AnnotationSource::kPasted) ++r.generated_instances;
    }
    result.dataset.images.push_back(std::move(outputs[g].record));
  }
  for (auto& [id, r] : reports) result.report.classes.push_back(r);
  result.dataset.validate();
  return result;
}

std::vector<PlacementViolation> verify_placements(const Dataset& d,
                                                  const PlacementConstraint& c) {
  std::vector<PlacementViolation> violations;
  for (const auto& image : d.images) {
    for (std::size_t i = 0; i < image.annotations.size(); ++i) {
      const Annotation& ann = image.annotations[i];
      if (ann.source != AnnotationSource::kPasted) continue;
      auto flag = [&](std::string reason) {
        violations.push_back({image.image_id, ann.instance_id, std::move(reason)});
      };
      const BBoxAbs& b = ann.bbox;
      if (b.x < 0 || b.y < 0 || b.right() > image.width || b.bottom() > image.height) {
        flag("out of bounds");
      }
      if (b.y < c.horizon_fraction * image.height - 1e-9) flag("above horizon");
      for (std::size_t j = 0; j < i; ++j) {
        const double overlap = iou(b, image.annotations[j].bbox);
        if (overlap > c.max_overlap_iou) {
          flag(fmt::format("IoU {:.4f} with instance {}", overlap,
                           image.annotations[j].instance_id));
        }
      }
    }
  }
  return violations;
}

}  // namespace seadet
