#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "seadet/augment.hpp"
#include "seadet/error.hpp"
#include "seadet/fixture.hpp"
#include "test_util.hpp"

using namespace seadet;

namespace {

std::vector<std::size_t> counts(std::initializer_list<std::size_t> v) { return v; }

InstancePatch solid_patch(int w, int h, float value, float alpha) {
  InstancePatch p;
  p.pixels = RgbaImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) p.pixels.at(x, y, c) = value;
      p.pixels.at(x, y, 3) = alpha;
    }
  }
  return p;
}

InstancePatch noisy_patch(int w, int h, std::uint64_t seed) {
  RngStream rng(seed);
  InstancePatch p;
  p.pixels = RgbaImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) p.pixels.at(x, y, c) = float(rng.uniform01());
      p.pixels.at(x, y, 3) = 1.0f;
    }
  }
  return p;
}

ImageRecord train_background(int w, int h) {
  ImageRecord r;
  r.image_id = 1;
  r.width = w;
  r.height = h;
  r.split = Split::kTrain;
  return r;
}

// Small in-memory dataset whose rasters live in a map keyed by image id.
struct MemoryDataset {
  Dataset dataset;
  std::map<std::int64_t, RgbImage> rasters;

  ImageLoader loader() const {
    return [this](const ImageRecord& r) -> std::optional<RgbImage> {
      auto it = rasters.find(r.image_id);
      if (it == rasters.end()) return std::nullopt;
      return it->second;
    };
  }
};

MemoryDataset memory_dataset() {
  MemoryDataset m;
  m.dataset.categories = CategoryTable::maritime();
  RngStream rng(99);
  for (int i = 0; i < 6; ++i) {
    ImageRecord r;
    r.image_id = i;
    r.width = 160;
    r.height = 120;
    r.domain = i < 2 ? Domain::kReal : Domain::kSynthetic;
    r.split = i < 5 ? Split::kTrain : Split::kTest;
    if (i == 5) r.domain = Domain::kReal;
    r.annotations.push_back({0, {10.0 + i, 70, 30, 14}, AnnotationSource::kOriginal, 0});
    r.annotations.push_back({1, {90, 60.0 + i, 14, 30}, AnnotationSource::kOriginal, 1});
    RgbImage img(r.width, r.height);
    for (auto& v : img.data()) v = float(rng.uniform01());
    m.rasters.emplace(r.image_id, std::move(img));
    m.dataset.images.push_back(std::move(r));
  }
  return m;
}

}  // namespace

TEST(Plan, ReferenceRebalanceDeficits) {
  const auto current = counts({4469, 1216, 1520});
  const auto targets = counts({4469, 3800, 3900});
  const AugmentPlan plan = plan_rebalance(current, targets, 1);
  ASSERT_EQ(plan.classes.size(), 3u);
  EXPECT_EQ(plan.classes[0].deficit, 0u);
  EXPECT_EQ(plan.classes[1].deficit, 2584u);
  EXPECT_EQ(plan.classes[2].deficit, 2380u);
  EXPECT_EQ(plan.total_images(), 2584u + 2380u);
}

TEST(Plan, TargetsEqualCurrentNeedNothing) {
  const auto current = counts({5, 7, 0});
  const AugmentPlan plan = plan_rebalance(current, current, 2);
  for (const auto& c : plan.classes) {
    EXPECT_EQ(c.deficit, 0u);
    EXPECT_EQ(c.images_to_generate, 0u);
  }
  EXPECT_EQ(plan.total_images(), 0u);
}

TEST(Plan, ImagesRoundUp) {
  const auto current = counts({0});
  const auto targets = counts({10});
  EXPECT_EQ(plan_rebalance(current, targets, 3).classes[0].images_to_generate, 4u);
  EXPECT_EQ(plan_rebalance(current, targets, 5).classes[0].images_to_generate, 2u);
  EXPECT_EQ(plan_rebalance(current, targets, 1).classes[0].images_to_generate, 10u);
}

TEST(Plan, InvariantsOverRandomInputs) {
  RngStream rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> cur, tgt;
    for (int c = 0; c < 4; ++c) {
      cur.push_back(std::size_t(rng.uniform_int(0, 500)));
      tgt.push_back(std::size_t(rng.uniform_int(0, 500)));
    }
    const int ipi = int(rng.uniform_int(1, 7));
    const AugmentPlan plan = plan_rebalance(cur, tgt, ipi);
    for (std::size_t c = 0; c < 4; ++c) {
      const std::size_t deficit = tgt[c] > cur[c] ? tgt[c] - cur[c] : 0;
      EXPECT_EQ(plan.classes[c].deficit, deficit);
      // Smallest image count covering the deficit.
      const std::size_t n = plan.classes[c].images_to_generate;
      EXPECT_GE(n * std::size_t(ipi), deficit);
      if (n > 0) {
        EXPECT_LT((n - 1) * std::size_t(ipi), deficit);
      }
    }
  }
}

TEST(Plan, RejectsBadInput) {
  const auto a = counts({1, 2});
  const auto b = counts({1});
  EXPECT_THROW(plan_rebalance(a, b, 1), Error);
  EXPECT_THROW(plan_rebalance(a, a, 0), Error);
}

TEST(Feather, RampAndInterior) {
  EXPECT_FLOAT_EQ(feather_alpha(0, 3), 0.25f);
  EXPECT_FLOAT_EQ(feather_alpha(1, 3), 0.5f);
  EXPECT_FLOAT_EQ(feather_alpha(2, 3), 0.75f);
  EXPECT_FLOAT_EQ(feather_alpha(3, 3), 1.0f);
  EXPECT_FLOAT_EQ(feather_alpha(0, 0), 1.0f);

  RgbImage src(20, 20, 0.5f);
  const RgbaImage patch = crop_patch(src, {2, 3, 12, 10}, 3);
  ASSERT_EQ(patch.width(), 12);
  ASSERT_EQ(patch.height(), 10);
  EXPECT_FLOAT_EQ(patch.at(0, 0, 3), 0.25f);
  EXPECT_FLOAT_EQ(patch.at(5, 5, 3), 1.0f);
  EXPECT_FLOAT_EQ(patch.at(11, 5, 3), 0.25f);
  EXPECT_FLOAT_EQ(patch.at(2, 5, 3), 0.75f);
}

TEST(Extract, CountsAndSkips) {
  MemoryDataset m = memory_dataset();
  // Four usable sailing boats in the training images 0..3.
  Dataset d = m.dataset;
  d.images.resize(4);
  auto ex = extract_instances(d, {1}, 3, m.loader());
  EXPECT_EQ(ex.patches.size(), 4u);
  EXPECT_EQ(ex.skipped_small, 0u);
  for (const auto& p : ex.patches) {
    EXPECT_EQ(p.source_class, 1);
    EXPECT_EQ(p.width(), 14);
    EXPECT_EQ(p.height(), 30);
  }

  EXPECT_TRUE(extract_instances(d, {}, 3, m.loader()).patches.empty());

  Dataset tiny = d;
  tiny.images.resize(1);
  tiny.images[0].annotations = {{2, {40, 40, 4, 4}, AnnotationSource::kOriginal, 0}};
  auto small = extract_instances(tiny, {2}, 3, m.loader());
  EXPECT_TRUE(small.patches.empty());
  EXPECT_EQ(small.skipped_small, 1u);
}

TEST(Extract, UnreadableImageIsSkippedWithWarning) {
  MemoryDataset m = memory_dataset();
  Dataset d = m.dataset;
  d.images.resize(2);
  d.images[1].image_id = 77;  // no raster for this id
  auto ex = extract_instances(d, {0}, 3, m.loader());
  EXPECT_EQ(ex.patches.size(), 1u);
  EXPECT_EQ(ex.skipped_unreadable, 1u);
  EXPECT_EQ(ex.warnings.size(), 1u);
}

TEST(Placement, EmptyBackgroundRespectsHorizon) {
  const ImageRecord bg = train_background(640, 480);
  PlacementConstraint c;
  std::size_t accepted = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed);
    auto p = place_instance(bg, 64, 64, {}, c, rng);
    if (!p) continue;
    ++accepted;
    EXPECT_GE(p->y, 168);
    EXPECT_GE(p->x, 0);
    EXPECT_LE(p->x + p->width, 640);
    EXPECT_LE(p->y + p->height, 480);
  }
  EXPECT_EQ(accepted, 200u);
}

TEST(Placement, TiledBackgroundRejects) {
  ImageRecord bg = train_background(64, 64);
  std::vector<BBoxAbs> tiles;
  for (int y = 0; y < 64; y += 8) {
    for (int x = 0; x < 64; x += 8) tiles.push_back({double(x), double(y), 8, 8});
  }
  PlacementConstraint c;
  c.max_overlap_iou = 0.0;
  RngStream rng(5);
  EXPECT_FALSE(place_instance(bg, 8, 8, tiles, c, rng).has_value());
}

TEST(Placement, SingleAttemptIsDeterministic) {
  const ImageRecord bg = train_background(100, 100);
  const std::vector<BBoxAbs> occupied{{40, 50, 30, 30}};
  PlacementConstraint c;
  c.max_attempts = 1;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream a(seed), b(seed);
    EXPECT_EQ(place_instance(bg, 20, 20, occupied, c, a),
              place_instance(bg, 20, 20, occupied, c, b));
  }
}

TEST(Placement, NonTrainingBackgroundThrows) {
  ImageRecord bg = train_background(100, 100);
  bg.split = Split::kVal;
  RngStream rng(1);
  EXPECT_THROW(place_instance(bg, 10, 10, {}, PlacementConstraint{}, rng), Error);
}

// Independent re-check of every accepted placement over cluttered scenes.
TEST(Placement, OracleFindsNoViolations) {
  RngStream scene_rng(2024);
  PlacementConstraint c;
  std::size_t checked = 0;
  for (int scene = 0; scene < 400; ++scene) {
    const int W = int(scene_rng.uniform_int(120, 400));
    const int H = int(scene_rng.uniform_int(100, 300));
    ImageRecord bg = train_background(W, H);
    std::vector<BBoxAbs> occupied;
    const int n_existing = int(scene_rng.uniform_int(0, 6));
    for (int i = 0; i < n_existing; ++i) {
      const double w = double(scene_rng.uniform_int(8, W / 3));
      const double h = double(scene_rng.uniform_int(8, H / 3));
      occupied.push_back({double(scene_rng.uniform_int(0, W - int(w))),
                          double(scene_rng.uniform_int(0, H - int(h))), w, h});
    }
    RngStream rng(std::uint64_t(scene) + 1);
    for (int paste = 0; paste < 4; ++paste) {
      const int pw = int(scene_rng.uniform_int(8, 40));
      const int ph = int(scene_rng.uniform_int(8, 40));
      auto p = place_instance(bg, pw, ph, occupied, c, rng);
      if (!p) continue;
      const oracle::Box b{double(p->x), double(p->y), double(p->width), double(p->height)};
      EXPECT_GE(b.x, 0);
      EXPECT_GE(b.y, 0);
      EXPECT_LE(b.x + b.w, W);
      EXPECT_LE(b.y + b.h, H);
      EXPECT_GE(b.y, c.horizon_fraction * H - 1e-9);
      for (const auto& o : occupied) {
        EXPECT_LE(oracle::iou(b, {o.x, o.y, o.w, o.h}), c.max_overlap_iou + 1e-12);
      }
      occupied.push_back({b.x, b.y, b.w, b.h});
      ++checked;
    }
  }
  EXPECT_GE(checked, 1000u);
}

TEST(Transform, FlipTwiceIsIdentity) {
  const InstancePatch p = noisy_patch(9, 5, 1);
  const InstancePatch once = transform_patch(p, true, 0, {});
  EXPECT_NE(once.pixels, p.pixels);
  EXPECT_EQ(transform_patch(once, true, 0, {}).pixels, p.pixels);
}

TEST(Transform, NeutralParamsAreIdentity) {
  const InstancePatch p = noisy_patch(7, 11, 2);
  EXPECT_EQ(transform_patch(p, false, 0, {0.0, 1.0}).pixels, p.pixels);
}

TEST(Transform, ContrastOnGrayRamp) {
  InstancePatch p = solid_patch(2, 2, 0.0f, 1.0f);
  const float ramp[4] = {0.2f, 0.4f, 0.6f, 0.8f};
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) p.pixels.at(i % 2, i / 2, c) = ramp[i];
  }
  const InstancePatch out = transform_patch(p, false, 0, {0.0, 1.2});
  // mean 0.5; out = mean + 1.2 * (in - mean)
  const double expected[4] = {0.14, 0.38, 0.62, 0.86};
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(out.pixels.at(i % 2, i / 2, c), expected[i], 1e-6);
    }
    EXPECT_EQ(out.pixels.at(i % 2, i / 2, 3), 1.0f);
  }
}

TEST(Transform, BrightnessClamps) {
  const InstancePatch p = solid_patch(3, 3, 0.95f, 1.0f);
  const InstancePatch out = transform_patch(p, false, 0, {0.2, 1.0});
  for (float v : out.pixels.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Transform, RotationGrowsCanvasAndKeepsRange) {
  const InstancePatch p = noisy_patch(20, 10, 3);
  for (int deg : {-10, 10}) {
    const InstancePatch out = transform_patch(p, false, deg, {0.1, 1.1});
    EXPECT_GT(out.width(), 20);
    EXPECT_GT(out.height(), 10);
    for (float v : out.pixels.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  EXPECT_THROW(transform_patch(p, false, 45, {}), Error);
  EXPECT_THROW(transform_patch(p, false, 0, {0.5, 1.0}), Error);
}

TEST(Composite, HardPasteCopiesPatch) {
  const RgbImage bg(10, 10, 0.1f);
  const InstancePatch p = noisy_patch(4, 3, 4);
  const Placement at{2, 5, 1.0, 4, 3};
  const CompositeResult r = composite(bg, p, at, 7);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const bool inside = x >= 2 && x < 6 && y >= 5 && y < 8;
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(r.raster.at(x, y, c), inside ? p.pixels.at(x - 2, y - 5, c) : 0.1f);
      }
    }
  }
  EXPECT_EQ(r.annotation.source, AnnotationSource::kPasted);
  EXPECT_EQ(r.annotation.bbox, (BBoxAbs{2, 5, 4, 3}));
  EXPECT_EQ(r.annotation.instance_id, 7);
}

TEST(Composite, ZeroAlphaLeavesBackground) {
  RgbImage bg(6, 6);
  RngStream rng(8);
  for (auto& v : bg.data()) v = float(rng.uniform01());
  InstancePatch p = solid_patch(3, 3, 0.9f, 0.0f);
  p.source_class = 2;
  const CompositeResult r = composite(bg, p, {1, 1, 1.0, 3, 3});
  EXPECT_EQ(r.raster, bg);
  EXPECT_EQ(r.annotation.category_id, 2);
}

TEST(Composite, HalfAlphaAverages) {
  RgbImage bg(5, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      for (int c = 0; c < 3; ++c) bg.at(x, y, c) = 0.1f * float(x) + 0.05f * float(c);
    }
  }
  InstancePatch p = solid_patch(3, 3, 0.0f, 0.5f);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      for (int c = 0; c < 3; ++c) p.pixels.at(x, y, c) = 0.1f * float(y * 3 + x);
    }
  }
  const CompositeResult r = composite(bg, p, {1, 2, 1.0, 3, 3});
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double expected = (p.pixels.at(x, y, c) + bg.at(x + 1, y + 2, c)) / 2.0;
        EXPECT_NEAR(r.raster.at(x + 1, y + 2, c), expected, 1e-6);
      }
    }
  }
}

TEST(Composite, RejectsPlacementOutsideImage) {
  const RgbImage bg(5, 5);
  EXPECT_THROW(composite(bg, solid_patch(3, 3, 0, 1), {4, 0, 1.0, 3, 3}), Error);
}

TEST(Run, ZeroDeficitReturnsInput) {
  MemoryDataset m = memory_dataset();
  const auto cur = split_stats(m.dataset).instances[index_of(Split::kTrain)];
  const AugmentPlan plan = plan_rebalance(cur, cur, 1);
  AugmentOptions opt;
  opt.loader = m.loader();
  opt.writer = nullptr;
  const AugmentResult r = run_augmentation(m.dataset, plan, {}, 1, opt);
  EXPECT_EQ(r.dataset, m.dataset);
}

TEST(Run, DeterministicInSeed) {
  MemoryDataset m = memory_dataset();
  const auto cur = split_stats(m.dataset).instances[index_of(Split::kTrain)];
  const auto tgt = counts({5, 12, 0});
  const AugmentPlan plan = plan_rebalance(cur, tgt, 2);
  ASSERT_EQ(plan.total_images(), 4u);

  std::map<std::string, RgbImage> written_a, written_b;
  auto run = [&](std::uint64_t seed, std::map<std::string, RgbImage>& sink, int jobs) {
    AugmentOptions opt;
    opt.loader = m.loader();
    opt.writer = [&sink](const ImageRecord& r, const RgbImage& img) { sink[r.file_path] = img; };
    opt.jobs = jobs;
    return run_augmentation(m.dataset, plan, {}, seed, opt);
  };
  std::map<std::string, RgbImage> unused;
  const AugmentResult a = run(11, written_a, 1);
  const AugmentResult b = run(11, written_b, 3);
  const AugmentResult c = run(12, unused, 1);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(written_a, written_b);
  EXPECT_NE(a.dataset, c.dataset);

  // Generated images carry exactly instances_per_image pastes of their class
  // and are numbered after the existing ids.
  std::size_t generated = 0;
  for (const auto& img : a.dataset.images) {
    if (img.domain != Domain::kAugmented) continue;
    ++generated;
    EXPECT_GE(img.image_id, 6);
    std::size_t pasted = 0;
    for (const auto& ann : img.annotations) {
      if (ann.source == AnnotationSource::kPasted) {
        ++pasted;
        EXPECT_EQ(ann.category_id, 1);
      }
    }
    EXPECT_EQ(pasted, 2u);
  }
  EXPECT_EQ(generated, 4u);
  EXPECT_TRUE(verify_placements(a.dataset, {}).empty());
}

TEST(Run, EmptyPoolNamesClass) {
  MemoryDataset m = memory_dataset();
  const auto cur = split_stats(m.dataset).instances[index_of(Split::kTrain)];
  const AugmentPlan plan = plan_rebalance(cur, counts({5, 5, 3}), 1);
  AugmentOptions opt;
  opt.loader = m.loader();
  opt.writer = nullptr;
  try {
    run_augmentation(m.dataset, plan, {}, 1, opt);
    FAIL() << "expected an empty patch pool error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyPatchPool);
    EXPECT_NE(std::string(e.what()).find("seamark"), std::string::npos);
  }
}

TEST(Verifier, FlagsPlantedViolations) {
  Dataset d;
  d.categories = CategoryTable::maritime();
  ImageRecord r = train_background(100, 100);
  r.domain = Domain::kAugmented;
  r.annotations = {{0, {10, 50, 20, 20}, AnnotationSource::kOriginal, 0},
                   {1, {12, 52, 20, 20}, AnnotationSource::kPasted, 1},
                   {1, {60, 5, 10, 10}, AnnotationSource::kPasted, 2}};
  d.images.push_back(r);
  const auto v = verify_placements(d, {});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].instance_id, 1);
  EXPECT_EQ(v[1].instance_id, 2);
}

namespace {

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Run, ReferenceShapeFixtureReachesTargets) {
  testutil::TempDir dir("augfix");
  const FixtureSpec spec = reference_shape_spec(0.01);
  const FixtureOutput fx = write_fixture(dir.path(), spec, 1);
  const SplitStats before = split_stats(fx.dataset);
  const auto& cur = before.instances[index_of(Split::kTrain)];
  const int ipi = 1;
  const AugmentPlan plan = plan_rebalance(cur, spec.augment_targets, ipi);

  std::map<std::string, std::string> eval_bytes;
  for (const auto& img : fx.dataset.images) {
    if (img.split != Split::kTrain) eval_bytes[img.file_path] = file_bytes(img.file_path);
  }

  AugmentOptions opt;
  opt.output_dir = dir / "augmented";
  const AugmentResult r = run_augmentation(fx.dataset, plan, {}, 7, opt);

  const SplitStats after = split_stats(r.dataset);
  EXPECT_EQ(after.image_total(Split::kTrain),
            before.image_total(Split::kTrain) + plan.total_images());

  std::vector<std::size_t> pasted(3, 0);
  for (const auto& img : r.dataset.images) {
    for (const auto& ann : img.annotations) {
      if (ann.source == AnnotationSource::kPasted) ++pasted[std::size_t(ann.category_id)];
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& cp = plan.classes[c];
    EXPECT_EQ(pasted[c], cp.images_to_generate * std::size_t(ipi));
    // original + pasted lands on the target, rounded up to the paste granularity
    EXPECT_GE(cur[c] + pasted[c], spec.augment_targets[c]);
    EXPECT_LT(cur[c] + pasted[c], std::max(spec.augment_targets[c], cur[c]) + std::size_t(ipi));
    EXPECT_GE(after.instance_count(Split::kTrain, int(c)) + std::size_t(ipi),
              spec.augment_targets[c]);
  }

  for (const auto& img : fx.dataset.images) {
    if (img.split == Split::kTrain) continue;
    const ImageRecord* out = r.dataset.find(img.image_id);
    ASSERT_NE(out, nullptr);
    EXPECT_EQ(*out, img);
    EXPECT_EQ(file_bytes(img.file_path), eval_bytes[img.file_path]);
  }
  EXPECT_EQ(split_fingerprint(r.dataset, Split::kTest), split_fingerprint(fx.dataset, Split::kTest));
  EXPECT_EQ(split_fingerprint(r.dataset, Split::kVal), split_fingerprint(fx.dataset, Split::kVal));
  EXPECT_TRUE(verify_placements(r.dataset, {}).empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "augmented" / "aug_sailing_boat_000000.png"));
}
