#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "seadet/dataset.hpp"

namespace seadet {

// Per-domain sampling weights; only their ratios matter.
struct DomainWeights {
  double real = 1.0;
  double synthetic = 1.0;
  double augmented = 1.0;

  double of(Domain d) const;
  void validate() const;
  Json to_json() const;

  static DomainWeights uniform() { return {}; }
  bool operator==(const DomainWeights&) const = default;
};

struct DomainCounts {
  std::size_t real = 0;
  std::size_t synthetic = 0;
  std::size_t augmented = 0;

  std::size_t of(Domain d) const;
  std::size_t& of(Domain d);
  std::size_t total() const { return real + synthetic + augmented; }
  bool operator==(const DomainCounts&) const = default;
};

// Image counts per domain over the training split.
DomainCounts training_domain_counts(const Dataset& d);

// Weights whose proportional-to-weight-times-count sampling yields real
// images with probability target_real_fraction. Synthetic and augmented
// images share weight 1.
DomainWeights weights_for_target_ratio(const DomainCounts& counts,
                                       double target_real_fraction);

struct SampleSchedule {
  std::vector<std::int64_t> image_ids;

  std::size_t epoch_size() const { return image_ids.size(); }
  bool operator==(const SampleSchedule&) const = default;
};

// Draws epoch_size training image ids with replacement. The probability of
// an image is proportional to its domain weight.
SampleSchedule draw_epoch(const Dataset& d, const DomainWeights& w, std::size_t epoch_size,
                          std::uint64_t seed);

// Tally of schedule members by domain. Throws for ids outside the
// training split.
DomainCounts effective_counts(const SampleSchedule& schedule, const Dataset& d);

// Newline-delimited image ids.
void write_schedule(const std::filesystem::path& path, const SampleSchedule& schedule);

}  // namespace seadet
