#include <algorithm>
#include <cmath>
#include <numbers>

#include "seadet/augment.hpp"
#include "seadet/error.hpp"

namespace seadet {
namespace {

// Bilinear sample of channel c with coordinates clamped to the raster.
float sample_clamped(const RgbaImage& img, double x, double y, int c) {
  x = std::clamp(x, 0.0, double(img.width() - 1));
  y = std::clamp(y, 0.0, double(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  return static_cast<float>((1 - fy) * top + fy * bottom);
}

// Bilinear alpha with zero outside the raster.
float sample_alpha(const RgbaImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto a = [&](int px, int py) -> double {
    if (px < 0 || py < 0 || px >= img.width() || py >= img.height()) return 0.0;
    return img.at(px, py, 3);
  };
  const double top = (1 - fx) * a(x0, y0) + fx * a(x0 + 1, y0);
  const double bottom = (1 - fx) * a(x0, y0 + 1) + fx * a(x0 + 1, y0 + 1);
  return static_cast<float>((1 - fy) * top + fy * bottom);
}

RgbaImage flip_horizontal(const RgbaImage& src) {
  RgbaImage out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      for (int c = 0; c < 4; ++c) out.at(src.width() - 1 - x, y, c) = src.at(x, y, c);
    }
  }
  return out;
}

RgbaImage rotate(const RgbaImage& src, int degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double w = src.width();
  const double h = src.height();
  const int out_w = static_cast<int>(std::ceil(std::abs(w * cs) + std::abs(h * sn) - 1e-9));
  const int out_h = static_cast<int>(std::ceil(std::abs(w * sn) + std::abs(h * cs) - 1e-9));
  RgbaImage out(out_w, out_h);
  const double scx = w / 2;
  const double scy = h / 2;
  const double dcx = out_w / 2.0;
  const double dcy = out_h / 2.0;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      // Inverse rotation of the destination pixel center.
      const double dx = x + 0.5 - dcx;
      const double dy = y + 0.5 - dcy;
      const double sx = cs * dx + sn * dy + scx - 0.5;
      const double sy = -sn * dx + cs * dy + scy - 0.5;
      const float alpha = sample_alpha(src, sx, sy);
      out.at(x, y, 3) = clamp01(alpha);
      if (alpha <= 0.0f) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = sample_clamped(src, sx, sy, c);
    }
  }
  return out;
}

RgbaImage resize(const RgbaImage& src, int width, int height) {
  if (width == src.width() && height == src.height()) return src;
  RgbaImage out(width, height);
  const double sx = double(src.width()) / width;
  const double sy = double(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const double fy = (y + 0.5) * sy - 0.5;
      for (int c = 0; c < 4; ++c) out.at(x, y, c) = sample_clamped(src, fx, fy, c);
    }
  }
  return out;
}

}  // namespace

void PhotometricParams::validate() const {
  if (!(brightness_delta >= -0.2 - 1e-12 && brightness_delta <= 0.2 + 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument, "brightness_delta must lie in [-0.2, 0.2]");
  }
  if (!(contrast_scale >= 0.8 - 1e-12 && contrast_scale <= 1.2 + 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument, "contrast_scale must lie in [0.8, 1.2]");
  }
}

float feather_alpha(int distance, int feather) {
  if (feather <= 0 || distance >= feather) return 1.0f;
  return static_cast<float>(distance + 1) / static_cast<float>(feather + 1);
}

RgbaImage crop_patch(const RgbImage& source, const BBoxAbs& box, int feather) {
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(source.width(), static_cast<int>(std::ceil(box.right())));
  const int y1 = std::min(source.height(), static_cast<int>(std::ceil(box.bottom())));
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorCode::kInvalidBox, "crop box does not intersect the image");
  }
  RgbaImage out(x1 - x0, y1 - y0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = source.at(x0 + x, y0 + y, c);
      const int d = std::min({x, y, out.width() - 1 - x, out.height() - 1 - y});
      out.at(x, y, 3) = feather_alpha(d, feather);
    }
  }
  return out;
}

InstancePatch transform_patch(const InstancePatch& patch, bool flip, int rotation_deg,
                              const PhotometricParams& photo) {
  if (rotation_deg != 0 && rotation_deg != 10 && rotation_deg != -10) {
    throw Error(ErrorCode::kInvalidArgument, "rotation must be one of -10, 0, 10 degrees");
  }
  photo.validate();
  InstancePatch out = patch;
  if (flip) out.pixels = flip_horizontal(out.pixels);
  if (rotation_deg != 0) out.pixels = rotate(out.pixels, rotation_deg);

  if (photo.brightness_delta != 0.0 || photo.contrast_scale != 1.0) {
    RgbaImage& px = out.pixels;
    const double n = double(px.width()) * px.height();
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0;
      for (int y = 0; y < px.height(); ++y) {
        for (int x = 0; x < px.width(); ++x) mean += px.at(x, y, c);
      }
      mean /= n;
      // s*in + (1-s)*mean is the contrast stretch about the channel mean,
      // written so that s = 1 reproduces the input exactly.
      const double s = photo.contrast_scale;
      for (int y = 0; y < px.height(); ++y) {
        for (int x = 0; x < px.width(); ++x) {
          const double v = s * px.at(x, y, c) + (1.0 - s) * mean + photo.brightness_delta;
          px.at(x, y, c) = clamp01(static_cast<float>(v));
        }
      }
    }
  }
  return out;
}

CompositeResult composite(const RgbImage& background, const InstancePatch& patch,
                          const Placement& placement, int instance_id) {
  if (placement.x < 0 || placement.y < 0 || placement.width <= 0 || placement.height <= 0 ||
      placement.x + placement.width > background.width() ||
      placement.y + placement.height > background.height()) {
    throw Error(ErrorCode::kInvalidArgument, "placement outside the background");
  }
  const RgbaImage scaled = resize(patch.pixels, placement.width, placement.height);
  CompositeResult result{background, {}};
  RgbImage& out = result.raster;
  for (int y = 0; y < scaled.height(); ++y) {
    for (int x = 0; x < scaled.width(); ++x) {
      const float a = scaled.at(x, y, 3);
      for (int c = 0; c < 3; ++c) {
        float& dst = out.at(placement.x + x, placement.y + y, c);
        dst = a * scaled.at(x, y, c) + (1.0f - a) * dst;
      }
    }
  }
  result.annotation = {patch.source_class, placement.box(), AnnotationSource::kPasted,
                       instance_id};
  return result;
}

PatchExtraction extract_instances(const Dataset& d, const std::set<int>& classes,
                                  int feather, const ImageLoader& loader) {
  PatchExtraction out;
  if (classes.empty()) return out;
  for (const auto& image : d.images) {
    std::vector<const Annotation*> wanted;
    for (const auto& ann : image.annotations) {
      if (!classes.count(ann.category_id)) continue;
      if (ann.bbox.w < kMinPatchSide || ann.bbox.h < kMinPatchSide) {
        ++out.skipped_small;
        continue;
      }
      wanted.push_back(&ann);
    }
    if (wanted.empty()) continue;
    const auto raster = loader(image);
    if (!raster || raster->width() != image.width || raster->height() != image.height) {
      out.skipped_unreadable += wanted.size();
      out.warnings.push_back("unreadable image " + image.file_path);
      continue;
    }
    for (const Annotation* ann : wanted) {
      out.patches.push_back({crop_patch(*raster, ann->bbox, feather), ann->category_id,
                             image.image_id, image.domain, feather});
    }
  }
  return out;
}

ImageLoader file_image_loader() {
  return [](const ImageRecord& r) { return read_image(r.file_path); };
}

ImageWriter file_image_writer() {
  return [](const ImageRecord& r, const RgbImage& raster) { write_png(r.file_path, raster); };
}

}  // namespace seadet
