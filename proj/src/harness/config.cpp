#include <algorithm>
#include <initializer_list>
#include <string_view>

#include "seadet/config.hpp"
#include "seadet/error.hpp"

namespace seadet {
namespace {

void check_keys(const Json& obj, std::string_view block,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kConfig, std::string(block) + " must be a JSON object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in " + std::string(block));
    }
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out, std::string_view block) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kConfig,
                std::string(block) + "." + key + " has the wrong type");
  }
}

}  // namespace

Json kernel_config_to_json(const KernelConfig& k) {
  return Json{{"channels", k.channels},
              {"K", k.num_queries},
              {"D", k.max_depth},
              {"lambda_u", k.lambda_u},
              {"num_classes", k.num_classes},
              {"cost_weights",
               {{"class", k.costs.w_cls}, {"l1", k.costs.w_l1}, {"giou", k.costs.w_giou}}},
              {"seeds",
               {{"backbone", k.backbone_seed},
                {"encoder", k.encoder_seed},
                {"head", k.head_seed},
                {"decoder", k.decoder_seed}}},
              {"fusion_enabled", k.fusion_enabled},
              {"uncertainty_query_enabled", k.uncertainty_query_enabled}};
}

KernelConfig kernel_config_from_json(const Json& block) {
  KernelConfig k;
  check_keys(block, "kernel",
             {"channels", "K", "D", "lambda_u", "num_classes", "cost_weights", "seeds",
              "fusion_enabled", "uncertainty_query_enabled"});
  read(block, "channels", k.channels, "kernel");
  read(block, "K", k.num_queries, "kernel");
  read(block, "D", k.max_depth, "kernel");
  read(block, "lambda_u", k.lambda_u, "kernel");
  read(block, "num_classes", k.num_classes, "kernel");
  read(block, "fusion_enabled", k.fusion_enabled, "kernel");
  read(block, "uncertainty_query_enabled", k.uncertainty_query_enabled, "kernel");
  if (block.contains("cost_weights")) {
    const auto& c = block.at("cost_weights");
    check_keys(c, "kernel.cost_weights", {"class", "l1", "giou"});
    read(c, "class", k.costs.w_cls, "kernel.cost_weights");
    read(c, "l1", k.costs.w_l1, "kernel.cost_weights");
    read(c, "giou", k.costs.w_giou, "kernel.cost_weights");
  }
  if (block.contains("seeds")) {
    const auto& s = block.at("seeds");
    check_keys(s, "kernel.seeds", {"backbone", "encoder", "head", "decoder"});
    read(s, "backbone", k.backbone_seed, "kernel.seeds");
    read(s, "encoder", k.encoder_seed, "kernel.seeds");
    read(s, "head", k.head_seed, "kernel.seeds");
    read(s, "decoder", k.decoder_seed, "kernel.seeds");
  }
  return k;
}

void HarnessConfig::validate() const {
  kernel.validate();
  augment.placement.validate();
  if (augment.instances_per_image < 1) {
    throw Error(ErrorCode::kConfig, "augment.instances_per_image must be >= 1");
  }
  if (augment.feather < 0) throw Error(ErrorCode::kConfig, "augment.feather must be >= 0");
  if (!(sampler.target_real_fraction > 0.0 && sampler.target_real_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "sampler.target_real_fraction must lie in (0, 1)");
  }
  if (sampler.epoch_size == 0) throw Error(ErrorCode::kConfig, "sampler.epoch_size must be >= 1");
  if (eval.depth < 0 || eval.depth > kernel.max_depth) {
    throw Error(ErrorCode::kConfig, "eval.depth must lie in [0, kernel.D]");
  }
  if (ablation.seeds.empty()) throw Error(ErrorCode::kConfig, "ablation.seeds must not be empty");
}

std::filesystem::path HarnessConfig::manifest_path() const {
  if (dataset.manifest.empty()) {
    throw Error(ErrorCode::kConfig, "no dataset manifest configured");
  }
  return dataset.manifest.is_absolute() ? dataset.manifest : base_dir / dataset.manifest;
}

HarnessConfig HarnessConfig::from_json(const Json& doc, const std::filesystem::path& base_dir) {
  HarnessConfig c;
  c.base_dir = base_dir;
  check_keys(doc, "config", {"dataset", "augment", "sampler", "kernel", "eval", "ablation"});

  if (doc.contains("dataset")) {
    const auto& b = doc.at("dataset");
    check_keys(b, "dataset", {"manifest"});
    std::string manifest;
    read(b, "manifest", manifest, "dataset");
    c.dataset.manifest = manifest;
  }
  if (doc.contains("augment")) {
    const auto& b = doc.at("augment");
    check_keys(b, "augment",
               {"enabled", "targets", "instances_per_image", "placement", "feather", "seed",
                "output_dir"});
    read(b, "enabled", c.augment.enabled, "augment");
    read(b, "instances_per_image", c.augment.instances_per_image, "augment");
    read(b, "feather", c.augment.feather, "augment");
    read(b, "seed", c.augment.seed, "augment");
    read(b, "output_dir", c.augment.output_dir, "augment");
    if (b.contains("targets")) {
      const auto& t = b.at("targets");
      if (!t.is_object()) throw Error(ErrorCode::kConfig, "augment.targets must be an object");
      for (const auto& [name, value] : t.items()) {
        if (!value.is_number_unsigned()) {
          throw Error(ErrorCode::kConfig, "augment.targets." + name + " must be a count");
        }
        c.augment.targets.emplace_back(name, value.get<std::size_t>());
      }
    }
    if (b.contains("placement")) {
      const auto& p = b.at("placement");
      auto& pc = c.augment.placement;
      check_keys(p, "augment.placement",
                 {"max_overlap_iou", "horizon_fraction", "max_attempts", "scale_min",
                  "scale_max"});
      read(p, "max_overlap_iou", pc.max_overlap_iou, "augment.placement");
      read(p, "horizon_fraction", pc.horizon_fraction, "augment.placement");
      read(p, "max_attempts", pc.max_attempts, "augment.placement");
      read(p, "scale_min", pc.scale_min, "augment.placement");
      read(p, "scale_max", pc.scale_max, "augment.placement");
    }
  }
  if (doc.contains("sampler")) {
    const auto& b = doc.at("sampler");
    check_keys(b, "sampler", {"target_real_fraction", "epoch_size"});
    read(b, "target_real_fraction", c.sampler.target_real_fraction, "sampler");
    read(b, "epoch_size", c.sampler.epoch_size, "sampler");
  }
  if (doc.contains("kernel")) c.kernel = kernel_config_from_json(doc.at("kernel"));
  if (doc.contains("eval")) {
    const auto& b = doc.at("eval");
    check_keys(b, "eval", {"depth"});
    read(b, "depth", c.eval.depth, "eval");
  }
  if (doc.contains("ablation")) {
    const auto& b = doc.at("ablation");
    check_keys(b, "ablation", {"seeds"});
    read(b, "seeds", c.ablation.seeds, "ablation");
  }
  c.validate();
  return c;
}

HarnessConfig HarnessConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

Json HarnessConfig::to_json() const {
  Json targets = Json::object();
  for (const auto& [name, n] : augment.targets) targets[name] = n;
  const auto& p = augment.placement;
  return Json{
      {"dataset", {{"manifest", dataset.manifest.generic_string()}}},
      {"augment",
       {{"enabled", augment.enabled},
        {"targets", targets},
        {"instances_per_image", augment.instances_per_image},
        {"placement",
         {{"max_overlap_iou", p.max_overlap_iou},
          {"horizon_fraction", p.horizon_fraction},
          {"max_attempts", p.max_attempts},
          {"scale_min", p.scale_min},
          {"scale_max", p.scale_max}}},
        {"feather", augment.feather},
        {"seed", augment.seed},
        {"output_dir", augment.output_dir}}},
      {"sampler",
       {{"target_real_fraction", sampler.target_real_fraction},
        {"epoch_size", sampler.epoch_size}}},
      {"kernel", kernel_config_to_json(kernel)},
      {"eval", {{"depth", eval.depth}}},
      {"ablation", {{"seeds", ablation.seeds}}}};
}

std::vector<std::size_t> resolve_targets(const AugmentConfig& a, const CategoryTable& categories,
                                         std::span<const std::size_t> current) {
  std::vector<std::size_t> targets(current.begin(), current.end());
  targets.resize(categories.size(), 0);
  for (const auto& [name, n] : a.targets) {
    auto id = categories.id_of(name);
    if (!id) throw Error(ErrorCode::kConfig, "augment.targets names unknown class '" + name + "'");
    targets[static_cast<std::size_t>(*id)] = n;
  }
  return targets;
}

}  // namespace seadet
