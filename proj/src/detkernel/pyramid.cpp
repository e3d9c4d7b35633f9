#include <cmath>

#include "kernel_math.hpp"
#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"
#include "seadet/rng.hpp"

namespace seadet {

Matrix Matrix::random(int rows, int cols, std::uint64_t seed, std::uint64_t tag,
                      double scale) {
  Matrix m(rows, cols);
  RngStream rng(seed, tag);
  const double sd = scale / std::sqrt(static_cast<double>(cols));
  for (double& v : m.values) v = sd * rng.normal();
  return m;
}

void Matrix::apply(std::span<const double> x, std::span<double> out) const {
  for (int r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] =
        detail::dot({values.data() + static_cast<std::size_t>(r) * cols,
                     static_cast<std::size_t>(cols)},
                    x);
  }
}

std::size_t FeaturePyramid::cells() const {
  std::size_t n = 0;
  for (const auto& m : maps) n += m.cells();
  return n;
}

namespace {

// Mean of channel c over [x0, x1) x [y0, y1) clipped to the image; 0 when
// the window is entirely outside.
double window_mean(const RgbImage& img, int x0, int y0, int x1, int y1, int c) {
  x1 = std::min(x1, img.width());
  y1 = std::min(y1, img.height());
  if (x0 >= x1 || y0 >= y1) return 0.0;
  double sum = 0.0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) sum += img.at(x, y, c);
  }
  return sum / (double(x1 - x0) * double(y1 - y0));
}

void cell_descriptor(const RgbImage& img, int x0, int y0, int stride,
                     std::span<double, kDescriptorSize> out) {
  const int half = stride / 2;
  std::size_t k = 0;
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      for (int c = 0; c < 3; ++c) {
        out[k++] = window_mean(img, x0 + qx * half, y0 + qy * half, x0 + (qx + 1) * half,
                               y0 + (qy + 1) * half, c);
      }
    }
  }
  const int x1 = std::min(x0 + stride, img.width());
  const int y1 = std::min(y0 + stride, img.height());
  for (int c = 0; c < 3; ++c) {
    const double mean = window_mean(img, x0, y0, x1, y1, c);
    double var = 0.0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double d = img.at(x, y, c) - mean;
        var += d * d;
      }
    }
    const double n = double(x1 - x0) * double(y1 - y0);
    out[k++] = n > 0 ? std::sqrt(var / n) : 0.0;
  }
}

}  // namespace

FeaturePyramid build_pyramid(const RgbImage& image, std::uint64_t seed, int channels) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  if (channels <= 0) throw Error(ErrorCode::kInvalidArgument, "channels must be positive");
  FeaturePyramid p;
  for (Level level : kAllLevels) {
    const int stride = stride_of(level);
    const int h = (image.height() + stride - 1) / stride;
    const int w = (image.width() + stride - 1) / stride;
    const auto tag = static_cast<std::uint64_t>(level);
    const Matrix projection = Matrix::random(channels, kDescriptorSize, seed, 100 + tag, 2.0);
    std::vector<double> bias(static_cast<std::size_t>(channels));
    RngStream bias_rng(seed, 200 + tag);
    for (double& b : bias) b = 0.1 * bias_rng.normal();

    FeatureMap map(level, h, w, channels);
    std::array<double, kDescriptorSize> desc{};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        cell_descriptor(image, x * stride, y * stride, stride, desc);
        auto out = map.cell(y, x);
        projection.apply(desc, out);
        for (int c = 0; c < channels; ++c) out[c] += bias[static_cast<std::size_t>(c)];
      }
    }
    p.at(level) = std::move(map);
  }
  return p;
}

RgbImage center_image(const RgbImage& image, const std::array<double, 3>& mean) {
  RgbImage out = image;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(out.at(x, y, c) - mean[static_cast<std::size_t>(c)]);
      }
    }
  }
  return out;
}

}  // namespace seadet
