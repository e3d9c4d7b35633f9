#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seadet/dataset.hpp"

namespace seadet {

// Image and instance counts for a generated dataset.
struct FixtureSpec {
  std::size_t train_real = 2;
  std::size_t train_synthetic = 36;
  std::size_t val = 1;
  std::size_t test = 1;
  // Training instances per class (motor_boat, sailing_boat, seamark).
  std::vector<std::size_t> train_instances{45, 13, 16};
  std::vector<std::size_t> eval_instances{1, 1, 1};  // per val/test image
  // Augmentation targets written into the generated config.
  std::vector<std::size_t> augment_targets{45, 38, 39};
  int width = 320;
  int height = 240;
};

// Counts scaled from the full-size split with ceil, never below 1.
FixtureSpec reference_shape_spec(double scale = 0.01);

// Table-sized counts built in memory, with no image files: train
// 199 real / 3582 synthetic / 5212 augmented, 49 val, 50 test.
Dataset full_scale_records();

struct FixtureOutput {
  Dataset dataset;
  std::filesystem::path manifest;
  std::filesystem::path config;
};

// Writes images/<split>/*.png, labels/<split>/*.txt, dataset.json and a
// config.json under `dir`. Images are sea gradients with drawn boats and
// seamarks; boxes are at least 8 px, below the horizon line, and do not
// overlap. Train, val and test scenes are generated independently.
FixtureOutput write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec,
                            std::uint64_t seed = 1);

}  // namespace seadet
