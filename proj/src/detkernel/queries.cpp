#include <algorithm>
#include <cmath>
#include <numeric>

#include "kernel_math.hpp"
#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"
#include "seadet/rng.hpp"

namespace seadet {

double QueryCandidate::max_class_score() const {
  return class_scores.empty() ? 0.0
                              : *std::max_element(class_scores.begin(), class_scores.end());
}

double query_uncertainty(double localization_score, double max_class_score) {
  return std::fabs(localization_score - max_class_score);
}

ScoreHead ScoreHead::from_seed(std::uint64_t seed, int channels, int num_classes) {
  ScoreHead head;
  head.classifier = Matrix::random(num_classes, channels, seed, 400, 2.0);
  RngStream rng(seed, 401);
  head.class_bias.resize(static_cast<std::size_t>(num_classes));
  for (double& b : head.class_bias) b = 0.1 * rng.normal();
  const Matrix loc = Matrix::random(1, channels, seed, 402, 2.0);
  head.localization = loc.values;
  head.localization_bias = 0.1 * rng.normal();
  return head;
}

std::vector<QueryCandidate> score_candidates(const FeaturePyramid& p, const ScoreHead& head) {
  std::vector<QueryCandidate> out;
  out.reserve(p.cells());
  const auto num_classes = static_cast<std::size_t>(head.classifier.rows);
  for (Level level : kAllLevels) {
    const FeatureMap& m = p.at(level);
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        const auto f = m.cell(y, x);
        QueryCandidate c;
        c.feature_index = {level, y, x};
        c.class_scores.resize(num_classes);
        head.classifier.apply(f, c.class_scores);
        for (std::size_t k = 0; k < num_classes; ++k) c.class_scores[k] += head.class_bias[k];
        detail::softmax(c.class_scores);
        c.localization_score =
            detail::sigmoid(detail::dot(head.localization, f) + head.localization_bias);
        c.uncertainty = query_uncertainty(c.localization_score, c.max_class_score());
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

double selection_utility(const QueryCandidate& c, double lambda_u) {
  return c.max_class_score() - lambda_u * c.uncertainty;
}

std::vector<std::size_t> select_queries(std::span<const QueryCandidate> candidates,
                                        std::size_t k, double lambda_u) {
  if (k > candidates.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "requested " + std::to_string(k) + " queries from " +
                    std::to_string(candidates.size()) + " candidates");
  }
  if (!(lambda_u >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_u must be >= 0");
  std::vector<double> utility(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    utility[i] = selection_utility(candidates[i], lambda_u);
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (utility[a] != utility[b]) return utility[a] > utility[b];
    const auto& fa = candidates[a].feature_index;
    const auto& fb = candidates[b].feature_index;
    if (fa != fb) return fa < fb;
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  order.resize(k);
  return order;
}

}  // namespace seadet
