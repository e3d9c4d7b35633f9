#include <cmath>

#include "kernel_math.hpp"
#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"

namespace seadet {

AttentionWeights AttentionWeights::from_seed(std::uint64_t seed, std::uint64_t tag,
                                             int channels) {
  return {Matrix::random(channels, channels, seed, tag * 8 + 1),
          Matrix::random(channels, channels, seed, tag * 8 + 2),
          Matrix::random(channels, channels, seed, tag * 8 + 3)};
}

AttentionOutput intra_scale_attention(const FeatureMap& m, const AttentionWeights& w) {
  const auto n = static_cast<int>(m.cells());
  const int ch = m.channels;
  std::vector<double> q(static_cast<std::size_t>(n) * ch);
  std::vector<double> k(q.size());
  std::vector<double> v(q.size());
  for (int i = 0; i < n; ++i) {
    const auto x = m.token(static_cast<std::size_t>(i));
    const std::size_t off = static_cast<std::size_t>(i) * ch;
    w.query.apply(x, {q.data() + off, static_cast<std::size_t>(ch)});
    w.key.apply(x, {k.data() + off, static_cast<std::size_t>(ch)});
    w.value.apply(x, {v.data() + off, static_cast<std::size_t>(ch)});
  }

  AttentionOutput out{FeatureMap(m.level, m.height, m.width, ch), Matrix(n, n)};
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(ch));
  for (int i = 0; i < n; ++i) {
    std::span<double> row{out.weights.values.data() + static_cast<std::size_t>(i) * n,
                          static_cast<std::size_t>(n)};
    const std::span<const double> qi{q.data() + static_cast<std::size_t>(i) * ch,
                                     static_cast<std::size_t>(ch)};
    for (int j = 0; j < n; ++j) {
      row[static_cast<std::size_t>(j)] =
          detail::dot(qi, {k.data() + static_cast<std::size_t>(j) * ch,
                           static_cast<std::size_t>(ch)}) *
          inv_sqrt;
    }
    detail::softmax(row);
    double* dst = out.features.values.data() + static_cast<std::size_t>(i) * ch;
    for (int j = 0; j < n; ++j) {
      const double a = row[static_cast<std::size_t>(j)];
      const double* vj = v.data() + static_cast<std::size_t>(j) * ch;
      for (int c = 0; c < ch; ++c) dst[c] += a * vj[c];
    }
  }
  return out;
}

FusionWeights FusionWeights::from_seed(std::uint64_t seed, int channels) {
  FusionWeights w;
  for (std::uint64_t i = 0; i < 2; ++i) {
    w.top_down[i] = Matrix::random(channels, channels, seed, 300 + i);
    w.bottom_up[i] = Matrix::random(channels, channels, seed, 310 + i);
  }
  return w;
}

FeatureMap upsample2(const FeatureMap& coarse, Level level, int height, int width) {
  if ((height + 1) / 2 != coarse.height || (width + 1) / 2 != coarse.width) {
    throw Error(ErrorCode::kInvalidArgument, "pyramid levels are not related by a factor of 2");
  }
  FeatureMap out(level, height, width, coarse.channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto src = coarse.cell(y / 2, x / 2);
      std::copy(src.begin(), src.end(), out.cell(y, x).begin());
    }
  }
  return out;
}

FeatureMap downsample2(const FeatureMap& fine, Level level) {
  const int h = (fine.height + 1) / 2;
  const int w = (fine.width + 1) / 2;
  FeatureMap out(level, h, w, fine.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto dst = out.cell(y, x);
      int count = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int fy = 2 * y + dy;
          const int fx = 2 * x + dx;
          if (fy >= fine.height || fx >= fine.width) continue;
          const auto src = fine.cell(fy, fx);
          for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
          ++count;
        }
      }
      for (double& v : dst) v /= count;
    }
  }
  return out;
}

namespace {

void check_channels(const FeaturePyramid& p) {
  const int ch = p.maps[0].channels;
  for (const auto& m : p.maps) {
    if (m.channels != ch) {
      throw Error(ErrorCode::kInvalidArgument, "pyramid levels disagree on channel count");
    }
  }
}

// mix(a + b) per cell.
FeatureMap add_and_mix(const FeatureMap& a, const FeatureMap& b, const Matrix& mix) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kInvalidArgument, "pyramid shape mismatch");
  }
  FeatureMap out(a.level, a.height, a.width, a.channels);
  std::vector<double> sum(static_cast<std::size_t>(a.channels));
  for (std::size_t i = 0; i < a.cells(); ++i) {
    const auto x = a.token(i);
    const auto y = b.token(i);
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] = x[c] + y[c];
    mix.apply(sum, {out.values.data() + i * a.channels, sum.size()});
  }
  return out;
}

}  // namespace

FeaturePyramid top_down_pass(const FeaturePyramid& p, const FusionWeights& w) {
  check_channels(p);
  FeaturePyramid out;
  const FeatureMap& s3 = p.at(Level::kS3);
  const FeatureMap& s4 = p.at(Level::kS4);
  out.at(Level::kS5) = p.at(Level::kS5);
  out.at(Level::kS4) =
      add_and_mix(s4, upsample2(out.at(Level::kS5), Level::kS4, s4.height, s4.width),
                  w.top_down[0]);
  out.at(Level::kS3) =
      add_and_mix(s3, upsample2(out.at(Level::kS4), Level::kS3, s3.height, s3.width),
                  w.top_down[1]);
  return out;
}

FeaturePyramid cross_scale_fuse(const FeaturePyramid& p, const FusionWeights& w,
                                bool enabled) {
  if (!enabled) return p;
  const FeaturePyramid td = top_down_pass(p, w);
  FeaturePyramid out;
  out.at(Level::kS3) = td.at(Level::kS3);
  out.at(Level::kS4) = add_and_mix(td.at(Level::kS4),
                                   downsample2(out.at(Level::kS3), Level::kS4), w.bottom_up[0]);
  out.at(Level::kS5) = add_and_mix(td.at(Level::kS5),
                                   downsample2(out.at(Level::kS4), Level::kS5), w.bottom_up[1]);
  return out;
}

}  // namespace seadet
