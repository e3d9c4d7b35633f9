#include "seadet/raster.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <array>
#include <cmath>
#include <fstream>

#include "seadet/error.hpp"

namespace seadet {

std::optional<RgbImage> read_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) return std::nullopt;
  RgbImage out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(row[x][2 - c]) / 255.0f;
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.empty()) throw Error(ErrorCode::kIo, "empty raster for " + path.string());
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = clamp01(image.at(x, y, c));
        row[x][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
}

std::optional<std::pair<int, int>> read_image_size(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<unsigned char, 24> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  static constexpr std::array<unsigned char, 8> kPngMagic = {
      0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() == 24 &&
      std::equal(kPngMagic.begin(), kPngMagic.end(), header.begin())) {
    auto be32 = [&](int off) {
      return (static_cast<std::uint32_t>(header[off]) << 24) |
             (static_cast<std::uint32_t>(header[off + 1]) << 16) |
             (static_cast<std::uint32_t>(header[off + 2]) << 8) |
             static_cast<std::uint32_t>(header[off + 3]);
    };
    return std::pair<int, int>(static_cast<int>(be32(16)), static_cast<int>(be32(20)));
  }
  auto image = read_image(path);
  if (!image) return std::nullopt;
  return std::pair<int, int>(image->width(), image->height());
}

}  // namespace seadet
