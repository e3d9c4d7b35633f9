#include <cmath>
#include <fstream>
#include <unordered_map>

#include "seadet/error.hpp"
#include "seadet/rng.hpp"
#include "seadet/sampler.hpp"

namespace seadet {
namespace {

// Domain probabilities are quantized to multiples of 2^-32 before
// sampling. A uniform rescale of the weights perturbs the normalized
// masses by a few ulps at most, which does not move the quantized
// thresholds, so the drawn schedule is invariant under rescaling.
constexpr double kQuantum = 4294967296.0;  // 2^32

}  // namespace

double DomainWeights::of(Domain d) const {
  switch (d) {
    case Domain::kReal: return real;
    case Domain::kSynthetic: return synthetic;
    case Domain::kAugmented: return augmented;
  }
  return real;
}

void DomainWeights::validate() const {
  for (double w : {real, synthetic, augmented}) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "domain weights must be finite and positive");
    }
  }
}

Json DomainWeights::to_json() const {
  return Json{{"real", real}, {"synthetic", synthetic}, {"augmented", augmented}};
}

std::size_t DomainCounts::of(Domain d) const {
  switch (d) {
    case Domain::kReal: return real;
    case Domain::kSynthetic: return synthetic;
    case Domain::kAugmented: return augmented;
  }
  return real;
}

std::size_t& DomainCounts::of(Domain d) {
  switch (d) {
    case Domain::kSynthetic: return synthetic;
    case Domain::kAugmented: return augmented;
    case Domain::kReal: break;
  }
  return real;
}

DomainCounts training_domain_counts(const Dataset& d) {
  DomainCounts counts;
  for (const auto& image : d.images) {
    if (image.split == Split::kTrain) ++counts.of(image.domain);
  }
  return counts;
}

DomainWeights weights_for_target_ratio(const DomainCounts& counts,
                                       double target_real_fraction) {
  if (!(target_real_fraction > 0.0 && target_real_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target_real_fraction must lie in (0, 1)");
  }
  if (counts.real == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "no real training images; a positive real fraction is unreachable");
  }
  const double others = static_cast<double>(counts.synthetic + counts.augmented);
  if (others == 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "only real training images; the real fraction is fixed at 1");
  }
  // w_r * n_r / (w_r * n_r + others) = t  =>  w_r = t * others / ((1 - t) * n_r)
  const double w_real = target_real_fraction * others /
                        ((1.0 - target_real_fraction) * static_cast<double>(counts.real));
  return {w_real, 1.0, 1.0};
}

SampleSchedule draw_epoch(const Dataset& d, const DomainWeights& w, std::size_t epoch_size,
                          std::uint64_t seed) {
  w.validate();
  std::array<std::vector<std::int64_t>, 3> members;
  for (const auto& image : d.images) {
    if (image.split == Split::kTrain) members[index_of(image.domain)].push_back(image.image_id);
  }
  std::array<double, 3> mass{};
  double total = 0.0;
  for (Domain dom : kAllDomains) {
    mass[index_of(dom)] = w.of(dom) * static_cast<double>(members[index_of(dom)].size());
    total += mass[index_of(dom)];
  }
  if (total <= 0.0) throw Error(ErrorCode::kInvalidArgument, "training split is empty");

  // Cumulative thresholds in units of 2^-32; the last live domain closes at 2^32.
  std::array<std::uint64_t, 3> threshold{};
  double cumulative = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    cumulative += mass[i];
    threshold[i] = static_cast<std::uint64_t>(std::llround(cumulative / total * kQuantum));
  }
  threshold[2] = static_cast<std::uint64_t>(kQuantum);

  RngStream rng(seed, 0x5a3d1e);
  SampleSchedule schedule;
  schedule.image_ids.reserve(epoch_size);
  for (std::size_t n = 0; n < epoch_size; ++n) {
    const std::uint64_t u = rng.next_u64() >> 32;
    std::size_t dom = 0;
    while (dom < 2 && (u >= threshold[dom] || members[dom].empty())) ++dom;
    while (members[dom].empty()) --dom;  // rounding landed on an empty tail domain
    const auto& pool = members[dom];
    const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1);
    schedule.image_ids.push_back(pool[static_cast<std::size_t>(pick)]);
  }
  return schedule;
}

DomainCounts effective_counts(const SampleSchedule& schedule, const Dataset& d) {
  std::unordered_map<std::int64_t, Domain> domain_of;
  for (const auto& image : d.images) {
    if (image.split == Split::kTrain) domain_of.emplace(image.image_id, image.domain);
  }
  DomainCounts counts;
  for (auto id : schedule.image_ids) {
    auto it = domain_of.find(id);
    if (it == domain_of.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "schedule id " + std::to_string(id) + " is not a training image");
    }
    ++counts.of(it->second);
  }
  return counts;
}

void write_schedule(const std::filesystem::path& path, const SampleSchedule& schedule) {
  std::string text;
  for (auto id : schedule.image_ids) text += std::to_string(id) + "\n";
  write_text_file(path, text);
}

}  // namespace seadet
