#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "seadet/config.hpp"
#include "seadet/error.hpp"
#include "seadet/fixture.hpp"
#include "seadet/raster.hpp"
#include "seadet/rng.hpp"

namespace seadet {
namespace {

namespace fs = std::filesystem;

using Rgb = std::array<float, 3>;

struct Palette {
  Rgb sky_top, sky_low, sea_top, sea_low;
};

// Synthetic scenes are rendered with a warmer, flatter palette so the two
// domains are distinguishable by colour statistics.
constexpr Palette kRealPalette{{0.55f, 0.70f, 0.90f}, {0.80f, 0.86f, 0.92f},
                               {0.20f, 0.38f, 0.55f}, {0.06f, 0.18f, 0.32f}};
constexpr Palette kSyntheticPalette{{0.70f, 0.66f, 0.78f}, {0.92f, 0.80f, 0.70f},
                                    {0.28f, 0.40f, 0.50f}, {0.14f, 0.22f, 0.30f}};

constexpr double kSkyFraction = 0.3;
// Drawn objects sit below this fraction of the height, under the
// augmentor's default horizon.
constexpr double kObjectTop = 0.4;

Rgb lerp(const Rgb& a, const Rgb& b, float t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

void put(RgbImage& img, int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  for (int k = 0; k < 3; ++k) img.at(x, y, k) = clamp01(c[k]);
}

void fill(RgbImage& img, int x0, int y0, int x1, int y1, const Rgb& c) {
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) put(img, x, y, c);
  }
}

RgbImage sea_background(int w, int h, const Palette& p, RngStream& rng) {
  RgbImage img(w, h);
  const int horizon = static_cast<int>(std::lround(kSkyFraction * h));
  for (int y = 0; y < h; ++y) {
    const Rgb base = y < horizon
                         ? lerp(p.sky_top, p.sky_low, float(y) / float(std::max(1, horizon - 1)))
                         : lerp(p.sea_top, p.sea_low,
                                float(y - horizon) / float(std::max(1, h - horizon - 1)));
    for (int x = 0; x < w; ++x) {
      const float n = static_cast<float>(rng.uniform(-0.02, 0.02));
      put(img, x, y, {base[0] + n, base[1] + n, base[2] + n});
    }
  }
  return img;
}

void draw_motor_boat(RgbImage& img, int x, int y, int w, int h) {
  const int hull_top = y + h - std::max(2, h * 45 / 100);
  fill(img, x, hull_top, x + w, y + h, {0.92f, 0.92f, 0.94f});
  fill(img, x, y + h - 2, x + w, y + h, {0.15f, 0.15f, 0.18f});
  fill(img, x + w / 4, y, x + w - w / 4, hull_top, {0.45f, 0.47f, 0.52f});
}

void draw_sailing_boat(RgbImage& img, int x, int y, int w, int h) {
  const int hull_h = std::max(3, h / 5);
  fill(img, x, y + h - hull_h, x + w, y + h, {0.45f, 0.30f, 0.20f});
  const int mast = x + w / 2;
  fill(img, mast, y, mast + 1, y + h - hull_h, {0.25f, 0.2f, 0.15f});
  const int sail_h = h - hull_h;
  for (int r = 0; r < sail_h; ++r) {
    const int half = (w / 2) * (r + 1) / sail_h;
    fill(img, mast - half, y + r, mast, y + r + 1, {0.96f, 0.96f, 0.94f});
  }
}

void draw_seamark(RgbImage& img, int x, int y, int w, int h, bool red) {
  const Rgb band = red ? Rgb{0.82f, 0.12f, 0.10f} : Rgb{0.10f, 0.58f, 0.22f};
  const int bands = 4;
  for (int b = 0; b < bands; ++b) {
    const int y0 = y + h * b / bands;
    const int y1 = y + h * (b + 1) / bands;
    fill(img, x, y0, x + w, y1, b % 2 == 0 ? band : Rgb{0.95f, 0.93f, 0.85f});
  }
}

struct Extent {
  int min_w, max_w, min_h, max_h;
};

constexpr std::array<Extent, 3> kExtents = {
    Extent{24, 48, 12, 20},  // motor_boat
    Extent{14, 24, 28, 44},  // sailing_boat
    Extent{8, 12, 16, 28},   // seamark
};

bool clear_of(const BBoxAbs& b, const std::vector<Annotation>& placed) {
  constexpr double kGap = 2.0;
  for (const auto& a : placed) {
    if (b.x < a.bbox.right() + kGap && a.bbox.x < b.right() + kGap &&
        b.y < a.bbox.bottom() + kGap && a.bbox.y < b.bottom() + kGap) {
      return false;
    }
  }
  return true;
}

ImageRecord render_scene(const fs::path& dir, const std::string& stem, Split split,
                         Domain domain, std::int64_t id, std::span<const int> classes,
                         const FixtureSpec& spec, RngStream& rng) {
  const int w = spec.width;
  const int h = spec.height;
  RgbImage img = sea_background(w, h, domain == Domain::kReal ? kRealPalette : kSyntheticPalette,
                                rng);
  ImageRecord rec;
  rec.image_id = id;
  rec.width = w;
  rec.height = h;
  rec.domain = domain;
  rec.split = split;
  const int top = static_cast<int>(std::ceil(kObjectTop * h));
  for (int cls : classes) {
    const Extent e = kExtents[static_cast<std::size_t>(cls) % kExtents.size()];
    const int bw = static_cast<int>(rng.uniform_int(e.min_w, e.max_w));
    const int bh = static_cast<int>(rng.uniform_int(e.min_h, e.max_h));
    if (bw > w || top + bh > h) {
      throw Error(ErrorCode::kInvalidArgument, "fixture image too small for its objects");
    }
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int x = static_cast<int>(rng.uniform_int(0, w - bw));
      const int y = static_cast<int>(rng.uniform_int(top, h - bh));
      const BBoxAbs box{double(x), double(y), double(bw), double(bh)};
      if (!clear_of(box, rec.annotations)) continue;
      switch (cls) {
        case 0: draw_motor_boat(img, x, y, bw, bh); break;
        case 1: draw_sailing_boat(img, x, y, bw, bh); break;
        default: draw_seamark(img, x, y, bw, bh, rng.coin()); break;
      }
      rec.annotations.push_back(
          {cls, box, AnnotationSource::kOriginal, static_cast<int>(rec.annotations.size())});
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorCode::kPlacementFailed, "fixture could not place object in " + stem);
    }
  }
  const fs::path image_path = dir / "images" / std::string(to_string(split)) / (stem + ".png");
  write_png(image_path, img);
  write_yolo_labels(dir / "labels" / std::string(to_string(split)) / (stem + ".txt"), rec);
  rec.file_path = image_path.string();
  return rec;
}

std::size_t scaled(double n, double scale) {
  // Guard against 3800 * 0.01 landing a hair above 38.
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * scale - 1e-9)));
}

}  // namespace

FixtureSpec reference_shape_spec(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fixture scale must lie in (0, 1]");
  }
  FixtureSpec s;
  s.train_real = scaled(199, scale);
  s.train_synthetic = scaled(3582, scale);
  s.val = scaled(49, scale);
  s.test = scaled(50, scale);
  s.train_instances = {scaled(4469, scale), scaled(1216, scale), scaled(1520, scale)};
  s.augment_targets = {scaled(4469, scale), scaled(3800, scale), scaled(3900, scale)};
  return s;
}

Dataset full_scale_records() {
  Dataset d;
  d.categories = CategoryTable::maritime();
  std::int64_t id = 0;
  auto add = [&](std::size_t n, Split s, Domain dom) {
    for (std::size_t i = 0; i < n; ++i) {
      ImageRecord r;
      r.image_id = id++;
      r.width = 640;
      r.height = 640;
      r.domain = dom;
      r.split = s;
      d.images.push_back(std::move(r));
    }
  };
  add(199, Split::kTrain, Domain::kReal);
  add(3582, Split::kTrain, Domain::kSynthetic);
  add(5212, Split::kTrain, Domain::kAugmented);
  add(49, Split::kVal, Domain::kReal);
  add(50, Split::kTest, Domain::kReal);
  return d;
}

FixtureOutput write_fixture(const fs::path& dir, const FixtureSpec& spec, std::uint64_t seed) {
  const CategoryTable categories = CategoryTable::maritime();
  if (spec.train_instances.size() != categories.size() ||
      spec.eval_instances.size() != categories.size() ||
      spec.augment_targets.size() != categories.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fixture per-class counts must cover 3 classes");
  }
  const std::size_t train_images = spec.train_real + spec.train_synthetic;
  if (train_images == 0) throw Error(ErrorCode::kInvalidArgument, "fixture needs train images");

  FixtureOutput out;
  out.dataset.categories = categories;
  RngStream rng(seed, 0xf1c7);

  std::vector<int> pool;
  for (std::size_t c = 0; c < spec.train_instances.size(); ++c) {
    pool.insert(pool.end(), spec.train_instances[c], static_cast<int>(c));
  }
  for (std::size_t i = pool.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(pool[i - 1], pool[j]);
  }

  std::int64_t id = 0;
  for (std::size_t g = 0; g < train_images; ++g) {
    std::vector<int> classes;
    for (std::size_t k = g; k < pool.size(); k += train_images) classes.push_back(pool[k]);
    std::sort(classes.begin(), classes.end());
    const bool real = g < spec.train_real;
    const std::string stem = real ? fmt::format("real_{:04}", g)
                                  : fmt::format("syn_{:04}", g - spec.train_real);
    out.dataset.images.push_back(render_scene(dir, stem, Split::kTrain,
                                              real ? Domain::kReal : Domain::kSynthetic, id++,
                                              classes, spec, rng));
  }

  std::vector<int> eval_classes;
  for (std::size_t c = 0; c < spec.eval_instances.size(); ++c) {
    eval_classes.insert(eval_classes.end(), spec.eval_instances[c], static_cast<int>(c));
  }
  for (std::size_t i = 0; i < spec.val; ++i) {
    out.dataset.images.push_back(render_scene(dir, fmt::format("val_{:04}", i), Split::kVal,
                                              Domain::kReal, id++, eval_classes, spec, rng));
  }
  for (std::size_t i = 0; i < spec.test; ++i) {
    out.dataset.images.push_back(render_scene(dir, fmt::format("test_{:04}", i), Split::kTest,
                                              Domain::kReal, id++, eval_classes, spec, rng));
  }
  out.dataset.validate();

  out.manifest = dir / "dataset.json";
  save_manifest(out.manifest, out.dataset);

  HarnessConfig config;
  config.dataset.manifest = "dataset.json";
  for (std::size_t c = 0; c < categories.size(); ++c) {
    config.augment.targets.emplace_back(categories.name(static_cast<int>(c)),
                                        spec.augment_targets[c]);
  }
  out.config = dir / "config.json";
  write_json_file(out.config, config.to_json());
  return out;
}

}  // namespace seadet
