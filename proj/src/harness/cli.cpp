#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "seadet/cli.hpp"
#include "seadet/config.hpp"
#include "seadet/error.hpp"
#include "seadet/eval.hpp"
#include "seadet/fixture.hpp"
#include "seadet/harness.hpp"
#include "seadet/parallel.hpp"
#include "seadet/sampler.hpp"

namespace seadet {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int jobs = 0;
  std::string out;
  std::string log_level = "info";
};

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("seadet");
  if (!logger) logger = spdlog::stderr_color_mt("seadet");
  spdlog::set_default_logger(logger);
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") {
    throw Error(ErrorCode::kInvalidArgument, "unknown log level '" + level + "'");
  }
  spdlog::set_level(lvl);
}

HarnessConfig load_config(const Globals& g) {
  if (g.config_path.empty()) return HarnessConfig{};
  return HarnessConfig::load(g.config_path);
}

Dataset load_dataset(const std::string& flag, const HarnessConfig& config) {
  return load_manifest(flag.empty() ? config.manifest_path() : fs::path(flag));
}

fs::path require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw Error(ErrorCode::kInvalidArgument, std::string("--out <") + what + "> is required");
  return g.out;
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Maritime detection pipeline toolkit: conversion, rebalancing, sampling, "
               "a deterministic detection kernel, evaluation and ablation.",
               "seadet"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  g.jobs = default_jobs();
  app.add_option("--config", g.config_path, "Harness config JSON");
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--jobs", g.jobs, "Worker threads (default: SEADET_JOBS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|critical|off");

  // convert
  auto* convert = app.add_subcommand("convert", "YOLO directory to COCO JSON or a manifest");
  std::string conv_images, conv_labels, conv_split = "train", conv_domain = "real",
                                        conv_format = "coco", conv_report;
  std::int64_t conv_first_id = 0;
  convert->add_option("--images", conv_images, "Image directory")->required();
  convert->add_option("--labels", conv_labels, "YOLO label directory")->required();
  convert->add_option("--split", conv_split, "train|val|test");
  convert->add_option("--domain", conv_domain, "real|synthetic|augmented");
  convert->add_option("--first-id", conv_first_id, "First image id");
  convert->add_option("--format", conv_format, "coco|manifest")
      ->check(CLI::IsMember({"coco", "manifest"}));
  convert->add_option("--report", conv_report, "Write the load report JSON here");

  // augment
  auto* augment = app.add_subcommand("augment", "Copy-paste rebalancing of the training split");
  std::string aug_dataset;
  augment->add_option("--dataset", aug_dataset, "Input manifest (default: from config)");

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a domain-weighted training epoch");
  std::string sample_dataset;
  std::optional<std::size_t> sample_epoch;
  std::optional<double> sample_fraction;
  bool sample_uniform = false;
  sample->add_option("--dataset", sample_dataset, "Input manifest (default: from config)");
  sample->add_option("--epoch-size", sample_epoch, "Draws per epoch");
  sample->add_option("--target-real-fraction", sample_fraction, "Expected real fraction");
  sample->add_flag("--uniform", sample_uniform, "Uniform weights over all training images");

  // detect
  auto* detect = app.add_subcommand("detect", "Run the detection kernel over a split");
  std::string det_dataset, det_split = "test";
  int det_depth = 0;
  detect->add_option("--dataset", det_dataset, "Input manifest (default: from config)");
  detect->add_option("--split", det_split, "train|val|test");
  detect->add_option("--depth", det_depth, "Decoder layers to run (default: all)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a detection dump against ground truth");
  std::string ev_dataset, ev_dets, ev_split = "test", ev_pr, ev_table, ev_scenario = "Run";
  eval->add_option("--dataset", ev_dataset, "Ground-truth manifest or COCO JSON");
  eval->add_option("--detections", ev_dets, "Detection dump (JSON lines)")->required();
  eval->add_option("--split", ev_split, "Split to evaluate");
  eval->add_option("--pr-csv", ev_pr, "Write PR curves here");
  eval->add_option("--table", ev_table, "Write a Markdown metrics table here");
  eval->add_option("--scenario", ev_scenario, "Scenario name for the table");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run the 8-variant ablation grid");
  std::vector<std::uint64_t> abl_seeds;
  std::string abl_artifacts;
  ablate->add_option("--seeds", abl_seeds, "Comma-separated seeds (default: from config)")
      ->delimiter(',');
  ablate->add_option("--artifacts", abl_artifacts,
                     "Directory for manifests and reports (default: next to --out)");

  // report
  auto* rep = app.add_subcommand("report", "Render Markdown tables");
  std::vector<std::string> rep_metrics, rep_scenarios;
  std::string rep_dataset;
  bool rep_full_scale = false;
  rep->add_option("--metrics", rep_metrics, "Metrics report JSON (repeatable)");
  rep->add_option("--scenario", rep_scenarios, "Scenario name per --metrics");
  rep->add_option("--dataset", rep_dataset, "Manifest for split and class tables");
  rep->add_flag("--full-scale", rep_full_scale, "Split table of the full-size split counts");

  // fixture
  auto* fixture = app.add_subcommand("fixture", "Generate a small synthetic dataset with the reference split proportions");
  std::string fx_preset;
  double fx_scale = 0.01;
  fixture->add_option("--preset", fx_preset, "Fixture preset")
      ->required()
      ->check(CLI::IsMember({"paper-shape"}));
  fixture->add_option("--scale", fx_scale, "Count scale relative to the full split")
      ->check(CLI::Range(1e-6, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    setup_logging(g.log_level);
    const HarnessConfig config = load_config(g);

    if (convert->parsed()) {
      const fs::path out = require_out(g, "file");
      YoloLoadOptions opt;
      opt.split = parse_split(conv_split);
      opt.domain = parse_domain(conv_domain);
      opt.first_image_id = conv_first_id;
      opt.jobs = g.jobs;
      LoadResult r = load_yolo_dataset(conv_images, conv_labels, CategoryTable::maritime(), opt);
      for (const auto& w : r.report.warnings) spdlog::warn("{}", w);
      if (conv_format == "coco") {
        write_json_file(out, export_coco_json(r.dataset));
      } else {
        save_manifest(out, r.dataset);
      }
      if (!conv_report.empty()) write_json_file(conv_report, r.report.to_json());
      spdlog::info("converted {} images, {} annotations", r.report.images, r.report.annotations);
      return 0;
    }

    if (augment->parsed()) {
      const fs::path out = require_out(g, "manifest");
      const Dataset d = load_dataset(aug_dataset, config);
      const std::uint64_t seed = g.seed_given ? g.seed : config.augment.seed;
      HarnessConfig c = config;
      if (c.augment.targets.empty()) {
        throw Error(ErrorCode::kConfig, "augment needs augment.targets in the config");
      }
      c.augment.enabled = true;
      AugmentResult r = augment_from_config(d, c, seed, out.parent_path() / c.augment.output_dir,
                                            g.jobs);
      save_manifest(out, r.dataset);
      write_json_file(sibling(out, "_augment_report.json"), r.report.to_json(d.categories));
      spdlog::info("augmented dataset: {} images", r.dataset.images.size());
      return 0;
    }

    if (sample->parsed()) {
      const fs::path out = require_out(g, "schedule");
      const Dataset d = load_dataset(sample_dataset, config);
      SamplerConfig s = config.sampler;
      if (sample_epoch) s.epoch_size = *sample_epoch;
      if (sample_fraction) s.target_real_fraction = *sample_fraction;
      VariantConfig v;
      v.weighting = !sample_uniform;
      const DomainWeights w = sampler_weights_for(v, training_domain_counts(d), s);
      const SampleSchedule schedule = draw_epoch(d, w, s.epoch_size, g.seed);
      write_schedule(out, schedule);
      const DomainCounts eff = effective_counts(schedule, d);
      std::cout << Json{{"weights", w.to_json()},
                        {"drawn",
                         {{"real", eff.real},
                          {"synthetic", eff.synthetic},
                          {"augmented", eff.augmented}}}}
                       .dump()
                << "\n";
      return 0;
    }

    if (detect->parsed()) {
      const fs::path out = require_out(g, "dump.jsonl");
      const Dataset d = load_dataset(det_dataset, config);
      const Split split = parse_split(det_split);
      KernelConfig k = config.kernel;
      k.num_classes = static_cast<int>(d.categories.size());
      const DetKernel kernel(k);
      const int depth = det_depth > 0 ? det_depth : config.inference_depth();
      std::vector<const ImageRecord*> images;
      for (const auto& img : d.images) {
        if (img.split == split) images.push_back(&img);
      }
      std::vector<std::string> lines(images.size());
      parallel_for(images.size(), g.jobs, [&](std::size_t i) {
        auto raster = read_image(images[i]->file_path);
        if (!raster) throw Error(ErrorCode::kIo, "cannot read " + images[i]->file_path);
        const ForwardResult fr = kernel.forward(*raster, depth);
        lines[i] = detection_dump_line(images[i]->image_id, fr.final_detections(), depth).dump();
      });
      std::string text;
      for (const auto& l : lines) text += l + "\n";
      write_text_file(out, text);
      spdlog::info("wrote detections for {} images", images.size());
      return 0;
    }

    if (eval->parsed()) {
      const fs::path out = require_out(g, "metrics.json");
      Dataset d;
      if (ev_dataset.empty()) {
        d = load_dataset("", config);
      } else {
        // Either a native manifest or a stock COCO document.
        d = dataset_from_json(read_json_file(ev_dataset));
      }
      const DetectionSet dets = read_detection_dump(ev_dets, d);
      const MatchResult matches = greedy_match(dets, d, parse_split(ev_split));
      const auto curves = pr_curves(matches);
      const MetricsReport r = report(matches, curves);
      write_json_file(out, r.to_json(d.categories));
      if (!ev_pr.empty()) emit_pr_csv(ev_pr, curves, &d.categories);
      if (!ev_table.empty()) {
        const ScenarioRow row = scenario_row(ev_scenario, r);
        write_text_file(ev_table, render_metrics_table(std::span(&row, 1)));
      }
      spdlog::info("mAP@0.5 = {:.4f}", r.macro.map50);
      return 0;
    }

    if (ablate->parsed()) {
      const fs::path out = require_out(g, "table.md");
      const std::vector<std::uint64_t> seeds =
          abl_seeds.empty() ? config.ablation.seeds : abl_seeds;
      const fs::path artifacts =
          abl_artifacts.empty() ? sibling(out, "_artifacts") : fs::path(abl_artifacts);
      const AblationResult r = run_ablation(config, seeds, artifacts, g.jobs);
      write_text_file(out, render_ablation_table(r.table));
      spdlog::info("ablation table written to {}", out.string());
      return 0;
    }

    if (rep->parsed()) {
      const fs::path out = require_out(g, "report.md");
      if (!rep_scenarios.empty() && rep_scenarios.size() != rep_metrics.size()) {
        throw Error(ErrorCode::kInvalidArgument, "give one --scenario per --metrics");
      }
      std::string text;
      if (!rep_metrics.empty()) {
        std::vector<ScenarioRow> rows;
        const CategoryTable categories = CategoryTable::maritime();
        for (std::size_t i = 0; i < rep_metrics.size(); ++i) {
          const MetricsReport m =
              MetricsReport::from_json(read_json_file(rep_metrics[i]), categories);
          rows.push_back(scenario_row(
              rep_scenarios.empty() ? fs::path(rep_metrics[i]).stem().string() : rep_scenarios[i],
              m));
        }
        text += render_metrics_table(rows);
      }
      if (rep_full_scale) {
        if (!text.empty()) text += "\n";
        text += render_split_table(split_stats(full_scale_records()));
      }
      if (!rep_dataset.empty()) {
        const Dataset d = load_manifest(rep_dataset);
        const SplitStats stats = split_stats(d);
        if (!text.empty()) text += "\n";
        text += render_split_table(stats) + "\n" + render_class_table(stats, d.categories);
      }
      if (text.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "nothing to report; pass --metrics, --dataset or --full-scale");
      }
      write_text_file(out, text);
      return 0;
    }

    if (fixture->parsed()) {
      const fs::path out = require_out(g, "dir");
      const FixtureOutput f = write_fixture(out, reference_shape_spec(fx_scale), g.seed);
      spdlog::info("fixture with {} images at {}", f.dataset.images.size(), out.string());
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace seadet
