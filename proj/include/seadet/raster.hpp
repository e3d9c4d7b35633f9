#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace seadet {

// Interleaved float raster, channel values nominally in [0, 1].
template <int Channels>
class Raster {
 public:
  static constexpr int kChannels = Channels;

  Raster() = default;
  Raster(int width, int height, float fill = 0.0f)
      : width_(width),
        height_(height),
        data_(static_cast<std::size_t>(width) * height * Channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ <= 0 || height_ <= 0; }

  float& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

using RgbImage = Raster<3>;
using RgbaImage = Raster<4>;

inline float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

// 8-bit PNG I/O. Values are quantized with round-to-nearest on write.
std::optional<RgbImage> read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

// Reads width/height from a PNG header without decoding; falls back to a
// full decode for other formats.
std::optional<std::pair<int, int>> read_image_size(
    const std::filesystem::path& path);

}  // namespace seadet
