#pragma once

#include <cstdint>

#include "eraseg/grid.hpp"

namespace eraseg {

// Generator settings for speckle-textured grayscale images with one or more
// blob-shaped nodules. Stands in for a clinical corpus: nodules are
// hypoechoic (darker than background) by default.
struct SyntheticSpec {
  Extents dims;

  int nodule_count_min = 1;
  int nodule_count_max = 1;

  double radius_min = 12.0;  // pixels/voxels
  double radius_max = 28.0;

  double fg_mean_min = 40.0;  // nodule intensity band
  double fg_mean_max = 80.0;
  double bg_mean_min = 130.0;
  double bg_mean_max = 190.0;
  double mean_margin = 30.0;  // required gap between the two bands

  double noise = 0.12;         // multiplicative speckle strength
  double irregularity = 0.25;  // boundary modulation amplitude, in [0, 0.9]

  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct SyntheticSample {
  ImageGrid image;
  BinaryMask mask;   // ground truth nodule cells
  BoundingBox box;   // tight axis-aligned box of the mask
};

// Deterministic under a fixed spec (including seed). Resamples nodule
// placements until the mask fills 10%..95% of its tight box; throws
// ConfigError when no valid placement exists.
SyntheticSample generate_synthetic(const SyntheticSpec& spec);

}  // namespace eraseg
