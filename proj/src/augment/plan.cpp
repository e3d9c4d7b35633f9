#include "seadet/augment.hpp"
#include "seadet/error.hpp"

namespace seadet {

std::size_t AugmentPlan::total_images() const {
  std::size_t total = 0;
  for (const auto& c : classes) total += c.images_to_generate;
  return total;
}

Json AugmentPlan::to_json(const CategoryTable& categories) const {
  Json per_class = Json::object();
  for (const auto& c : classes) {
    per_class[categories.contains(c.class_id) ? categories.name(c.class_id)
                                              : std::to_string(c.class_id)] = {
        {"current_instances", c.current},
        {"target_instances", c.target},
        {"deficit", c.deficit},
        {"images_to_generate", c.images_to_generate}};
  }
  return Json{{"instances_per_image", instances_per_image}, {"classes", per_class}};
}

AugmentPlan plan_rebalance(std::span<const std::size_t> current,
                           std::span<const std::size_t> targets, int instances_per_image) {
  if (current.size() != targets.size()) {
    throw Error(ErrorCode::kInvalidArgument, "current and target class counts differ in length");
  }
  if (instances_per_image < 1) {
    throw Error(ErrorCode::kInvalidArgument, "instances_per_image must be >= 1");
  }
  AugmentPlan plan;
  plan.instances_per_image = instances_per_image;
  const auto per_image = static_cast<std::size_t>(instances_per_image);
  for (std::size_t i = 0; i < current.size(); ++i) {
    ClassPlan c;
    c.class_id = static_cast<int>(i);
    c.current = current[i];
    c.target = targets[i];
    c.deficit = targets[i] > current[i] ? targets[i] - current[i] : 0;
    c.images_to_generate = (c.deficit + per_image - 1) / per_image;
    plan.classes.push_back(c);
  }
  return plan;
}

}  // namespace seadet
