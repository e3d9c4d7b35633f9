#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "seadet/error.hpp"
#include "seadet/harness.hpp"
#include "seadet/parallel.hpp"
#include "seadet/rng.hpp"

namespace seadet {
namespace {

constexpr std::uint64_t kScheduleStream = 0x5c4ed;

const char* mark(bool on) { return on ? "✓" : "✗"; }

}  // namespace

std::string variant_label(bool fusion, bool query_init, bool weighting) {
  if (!fusion && !query_init && !weighting) return "baseline";
  if (fusion && query_init && weighting) return "full";
  std::string label;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!label.empty()) label += '+';
    label += name;
  };
  add(fusion, "fusion");
  add(query_init, "query");
  add(weighting, "weighting");
  return label;
}

std::vector<VariantConfig> enumerate_variants() {
  static constexpr bool kGrid[8][3] = {
      {false, false, false}, {true, false, false}, {false, true, false}, {false, false, true},
      {true, true, false},   {true, false, true},  {false, true, true},  {true, true, true}};
  std::vector<VariantConfig> out;
  for (const auto& g : kGrid) {
    out.push_back({g[0], g[1], g[2], variant_label(g[0], g[1], g[2])});
  }
  return out;
}

std::string VariantConfig::display_name() const {
  const int n = int(fusion) + int(query_init) + int(weighting);
  if (n == 0) return "Baseline (no enhancements)";
  if (n == 3) return "Full model (all enabled)";
  std::vector<std::string> parts;
  if (fusion) parts.emplace_back("Fusion");
  if (query_init) parts.emplace_back("Query");
  if (weighting) parts.emplace_back("Weighting");
  if (n == 1) return parts[0] + " only";
  return parts[0] + " + " + parts[1];
}

Json VariantConfig::to_json() const {
  return Json{{"label", label},
              {"fusion", fusion},
              {"query_init", query_init},
              {"weighting", weighting}};
}

PreparedData prepare_data(const Dataset& d, int jobs, const ImageLoader& loader) {
  PreparedData data;
  data.dataset = &d;
  data.dataset_fingerprint = dataset_fingerprint(d);
  data.test_fingerprint = split_fingerprint(d, Split::kTest);

  std::vector<const ImageRecord*> test;
  std::vector<const ImageRecord*> train;
  for (const auto& img : d.images) {
    if (img.split == Split::kTest) test.push_back(&img);
    if (img.split == Split::kTrain) train.push_back(&img);
  }

  data.test_images.resize(test.size());
  parallel_for(test.size(), jobs, [&](std::size_t i) {
    auto raster = loader(*test[i]);
    if (!raster) {
      throw Error(ErrorCode::kIo, "cannot read test image " + test[i]->file_path);
    }
    data.test_images[i] = std::move(*raster);
  });
  for (const auto* img : test) data.test_ids.push_back(img->image_id);

  std::vector<std::optional<std::array<double, 3>>> means(train.size());
  parallel_for(train.size(), jobs, [&](std::size_t i) {
    auto raster = loader(*train[i]);
    if (!raster || raster->width() * raster->height() == 0) return;
    std::array<double, 3> sum{};
    for (int y = 0; y < raster->height(); ++y) {
      for (int x = 0; x < raster->width(); ++x) {
        for (int c = 0; c < 3; ++c) sum[c] += raster->at(x, y, c);
      }
    }
    const double n = double(raster->width()) * raster->height();
    means[i] = std::array<double, 3>{sum[0] / n, sum[1] / n, sum[2] / n};
  });
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (means[i]) data.train_mean.emplace(train[i]->image_id, *means[i]);
    std::vector<std::size_t> counts(d.categories.size(), 0);
    for (const auto& a : train[i]->annotations) {
      if (d.categories.contains(a.category_id)) ++counts[a.category_id];
    }
    data.train_class_counts.emplace(train[i]->image_id, std::move(counts));
  }
  return data;
}

KernelConfig kernel_config_for(const VariantConfig& v, std::uint64_t seed,
                               const KernelConfig& base) {
  KernelConfig k = base;
  k.fusion_enabled = v.fusion;
  k.uncertainty_query_enabled = v.query_init;
  k.backbone_seed = derive_seed(base.backbone_seed, seed);
  k.encoder_seed = derive_seed(base.encoder_seed, seed);
  k.head_seed = derive_seed(base.head_seed, seed);
  k.decoder_seed = derive_seed(base.decoder_seed, seed);
  return k;
}

DomainWeights sampler_weights_for(const VariantConfig& v, const DomainCounts& counts,
                                  const SamplerConfig& s) {
  if (!v.weighting) return DomainWeights::uniform();
  return weights_for_target_ratio(counts, s.target_real_fraction);
}

Calibration calibration_from_schedule(const SampleSchedule& schedule, const PreparedData& data,
                                      std::size_t num_classes) {
  Calibration cal;
  std::vector<double> counts(num_classes, 0.0);
  double total = 0.0;
  std::array<double, 3> mean{};
  std::size_t with_mean = 0;
  for (auto id : schedule.image_ids) {
    if (auto it = data.train_class_counts.find(id); it != data.train_class_counts.end()) {
      for (std::size_t c = 0; c < num_classes && c < it->second.size(); ++c) {
        counts[c] += double(it->second[c]);
        total += double(it->second[c]);
      }
    }
    if (auto it = data.train_mean.find(id); it != data.train_mean.end()) {
      for (int c = 0; c < 3; ++c) mean[c] += it->second[c];
      ++with_mean;
    }
  }
  if (with_mean > 0) {
    for (auto& m : mean) m /= double(with_mean);
    cal.input_mean = mean;
  }
  cal.class_log_prior.resize(num_classes);
  double avg = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    cal.class_log_prior[c] = std::log((counts[c] + 1.0) / (total + double(num_classes)));
    avg += cal.class_log_prior[c];
  }
  avg /= double(num_classes);
  for (auto& p : cal.class_log_prior) p -= avg;
  return cal;
}

SeedOutcome run_seed(const VariantConfig& v, std::uint64_t seed, const PreparedData& data,
                     const HarnessConfig& config) {
  SeedOutcome out;
  out.seed = seed;
  try {
    const Dataset& d = *data.dataset;
    if (static_cast<std::size_t>(config.kernel.num_classes) != d.categories.size()) {
      throw Error(ErrorCode::kConfig, "kernel.num_classes does not match the dataset categories");
    }
    out.weights = sampler_weights_for(v, training_domain_counts(d), config.sampler);
    const SampleSchedule schedule =
        draw_epoch(d, out.weights, config.sampler.epoch_size, derive_seed(seed, kScheduleStream));
    const Calibration cal = calibration_from_schedule(schedule, data, d.categories.size());

    const DetKernel kernel(kernel_config_for(v, seed, config.kernel));
    const int depth = config.inference_depth();
    DetectionSet dets;
    for (std::size_t i = 0; i < data.test_images.size(); ++i) {
      const auto& img = data.test_images[i];
      const ForwardResult fr = kernel.forward(img, depth, cal);
      for (const auto& det : fr.final_detections()) {
        dets.detections.push_back({data.test_ids[i], det.class_id, det.confidence,
                                   norm_to_pixels(det.bbox, img.width(), img.height())});
      }
    }
    dets.validate(d.categories);
    const MatchResult matches = greedy_match(dets, d, Split::kTest);
    out.curves = pr_curves(matches);
    out.metrics = report(matches, out.curves);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    spdlog::warn("{} seed {} failed: {}", v.label, seed, e.what());
  }
  return out;
}

std::string manifest_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(env));
    } catch (const std::exception&) {
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json run_manifest(const VariantConfig& v, std::span<const SeedOutcome> seeds,
                  const PreparedData& data, const HarnessConfig& config,
                  const std::string& timestamp) {
  Json seed_status = Json::array();
  for (const auto& s : seeds) {
    Json entry{{"seed", s.seed}, {"status", s.ok ? "ok" : "failed"}};
    if (!s.ok) entry["error"] = s.error;
    seed_status.push_back(std::move(entry));
  }
  KernelConfig kernel = config.kernel;
  kernel.fusion_enabled = v.fusion;
  kernel.uncertainty_query_enabled = v.query_init;

  Json base = config.to_json();
  base.erase("kernel");
  return Json{
      {"label", v.label},
      {"variant", v.to_json()},
      {"seeds", std::move(seed_status)},
      {"dataset_fingerprint", data.dataset_fingerprint},
      {"test_split_fingerprint", data.test_fingerprint},
      {"hyperparameters",
       {{"optimizer", "AdamW"},
        {"lr", 1e-4},
        {"schedule", "cosine"},
        {"epochs", 100},
        {"batch", 8},
        {"imgsz", 640},
        {"patience", 20},
        {"erasing", 0.1},
        {"hflip", true},
        {"executed", false}}},
      {"kernel", kernel_config_to_json(kernel)},
      {"kernel_seed_mixing", "each weight seed is mixed with the run seed"},
      {"sampler",
       {{"weighting", v.weighting},
        {"target_real_fraction", config.sampler.target_real_fraction},
        {"epoch_size", config.sampler.epoch_size}}},
      {"evaluation",
       {{"split", "test"},
        {"iou_threshold", kIouThreshold},
        {"ap", "101-point interpolated"},
        {"point_metrics", "confidence maximizing macro F1"},
        {"depth", config.inference_depth()}}},
      {"config", std::move(base)},
      {"timestamps", {{"created", timestamp}}}};
}

Json comparable_manifest(const Json& manifest) {
  Json m = manifest;
  m.erase("timestamps");
  m.erase("label");
  if (m.contains("variant")) m["variant"].erase("label");
  return m;
}

VariantRun run_variant(const VariantConfig& v, const PreparedData& data,
                       std::span<const std::uint64_t> seeds, const HarnessConfig& config,
                       int jobs) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  VariantRun run;
  run.variant = v;
  run.seeds.resize(seeds.size());
  parallel_for(seeds.size(), jobs,
               [&](std::size_t i) { run.seeds[i] = run_seed(v, seeds[i], data, config); });
  run.manifest = run_manifest(v, run.seeds, data, config, manifest_timestamp());
  return run;
}

AblationTable aggregate(std::span<const VariantRun> runs) {
  AblationTable table;
  for (const auto& v : enumerate_variants()) {
    const VariantRun* run = nullptr;
    for (const auto& r : runs) {
      if (r.variant.fusion == v.fusion && r.variant.query_init == v.query_init &&
          r.variant.weighting == v.weighting) {
        run = &r;
        break;
      }
    }
    if (run == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "missing ablation variant '" + v.label + "'");
    }
    AblationRow row;
    row.variant = v;
    std::vector<double> maps;
    for (const auto& s : run->seeds) {
      if (!s.ok) continue;
      maps.push_back(s.metrics.macro.map50);
      row.mean_precision += s.metrics.macro.precision;
      row.mean_recall += s.metrics.macro.recall;
      row.mean_f1 += s.metrics.macro.f1;
    }
    if (maps.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "variant '" + v.label + "' has no successful seed");
    }
    const double n = double(maps.size());
    row.n_seeds = maps.size();
    for (double m : maps) row.mean_map50 += m;
    row.mean_map50 /= n;
    double var = 0.0;
    for (double m : maps) var += (m - row.mean_map50) * (m - row.mean_map50);
    row.std_map50 = std::sqrt(var / n);
    row.mean_precision /= n;
    row.mean_recall /= n;
    row.mean_f1 /= n;
    row.f1_of_means = f1_score(row.mean_precision, row.mean_recall);
    table.rows.push_back(row);
  }
  return table;
}

Json AblationTable::to_json() const {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back(Json{{"variant", r.variant.to_json()},
                       {"name", r.variant.display_name()},
                       {"n_seeds", r.n_seeds},
                       {"map50_mean", r.mean_map50},
                       {"map50_std", r.std_map50},
                       {"precision_mean", r.mean_precision},
                       {"recall_mean", r.mean_recall},
                       {"f1_mean_of_runs", r.mean_f1},
                       {"f1_of_mean_pr", r.f1_of_means}});
  }
  return Json{{"rows", std::move(out)}};
}

std::string AblationTable::to_csv() const {
  std::string out =
      "variant,fusion,query_init,weighting,n_seeds,map50_mean,map50_std,precision_mean,"
      "recall_mean,f1_mean_of_runs,f1_of_mean_pr\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.variant.label,
                       int(r.variant.fusion), int(r.variant.query_init),
                       int(r.variant.weighting), r.n_seeds, r.mean_map50, r.std_map50,
                       r.mean_precision, r.mean_recall, r.mean_f1, r.f1_of_means);
  }
  return out;
}

std::string render_ablation_table(const AblationTable& table) {
  std::size_t seeds = 0;
  for (const auto& r : table.rows) seeds = std::max(seeds, r.n_seeds);
  std::string out = fmt::format(
      "> Desk-scale ablation of an untrained mechanism kernel, mean over {} seed(s). "
      "Differences between variants come only from flag-gated code paths and are not "
      "expected to reproduce trained-model values or their ordering. Weighting off means "
      "uniform sampling over all training images.\n\n",
      seeds);
  out += "| Variant | Fusion | Query Init. | Weighting | mAP@0.5 |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& r : table.rows) {
    out += fmt::format("| {} | {} | {} | {} | {:.2f} |\n", r.variant.display_name(),
                       mark(r.variant.fusion), mark(r.variant.query_init),
                       mark(r.variant.weighting), r.mean_map50);
  }
  return out;
}

AugmentResult augment_from_config(const Dataset& d, const HarnessConfig& config,
                                  std::uint64_t seed, const std::filesystem::path& output_dir,
                                  int jobs) {
  AugmentResult none{d, {}};
  if (!config.augment.enabled || config.augment.targets.empty()) return none;
  const SplitStats stats = split_stats(d);
  const auto& current = stats.instances[index_of(Split::kTrain)];
  const auto targets = resolve_targets(config.augment, d.categories, current);
  const AugmentPlan plan = plan_rebalance(current, targets, config.augment.instances_per_image);
  if (plan.total_images() == 0) return none;
  AugmentOptions options;
  options.feather = config.augment.feather;
  options.output_dir = output_dir;
  options.jobs = jobs;
  return run_augmentation(d, plan, config.augment.placement, seed, options);
}

AblationResult run_ablation(const HarnessConfig& config, std::span<const std::uint64_t> seeds,
                            const std::filesystem::path& artifacts, int jobs) {
  namespace fs = std::filesystem;
  config.validate();
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");

  const Dataset base = load_manifest(config.manifest_path());
  AugmentResult aug = augment_from_config(base, config, config.augment.seed,
                                          artifacts / config.augment.output_dir, jobs);
  AblationResult result;
  result.dataset = std::move(aug.dataset);
  const Dataset& d = result.dataset;
  d.validate();
  fs::create_directories(artifacts);
  save_manifest(artifacts / "dataset.json", d);
  write_json_file(artifacts / "augment_report.json", aug.report.to_json(d.categories));

  const PreparedData data = prepare_data(d, jobs);
  const auto variants = enumerate_variants();
  std::vector<SeedOutcome> outcomes(variants.size() * seeds.size());
  parallel_for(outcomes.size(), jobs, [&](std::size_t j) {
    const auto& v = variants[j / seeds.size()];
    outcomes[j] = run_seed(v, seeds[j % seeds.size()], data, config);
  });

  const std::string timestamp = manifest_timestamp();
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    VariantRun run;
    run.variant = variants[vi];
    run.seeds.assign(outcomes.begin() + vi * seeds.size(),
                     outcomes.begin() + (vi + 1) * seeds.size());
    run.manifest = run_manifest(run.variant, run.seeds, data, config, timestamp);
    const auto& label = run.variant.label;
    write_json_file(artifacts / "manifests" / (label + ".json"), run.manifest);
    for (const auto& s : run.seeds) {
      Json doc{{"variant", label},
               {"seed", s.seed},
               {"status", s.ok ? "ok" : "failed"},
               {"sampler_weights", s.weights.to_json()}};
      if (s.ok) {
        doc["metrics"] = s.metrics.to_json(d.categories);
        emit_pr_csv(artifacts / "reports" / label / fmt::format("seed_{}_pr.csv", s.seed),
                    s.curves, &d.categories);
      } else {
        doc["error"] = s.error;
      }
      write_json_file(artifacts / "reports" / label / fmt::format("seed_{}.json", s.seed), doc);
    }
    result.runs.push_back(std::move(run));
  }
  result.table = aggregate(result.runs);
  write_json_file(artifacts / "ablation.json", result.table.to_json());
  write_text_file(artifacts / "ablation.csv", result.table.to_csv());
  return result;
}

}  // namespace seadet
