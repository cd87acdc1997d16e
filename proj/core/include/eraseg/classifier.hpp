#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "eraseg/grid.hpp"
#include "eraseg/neural.hpp"
#include "eraseg/superpixel.hpp"

namespace eraseg {

enum class SampleTag { Nodule, Normal };

enum class SampleProvenance { NegativePatch, PositiveBox, FillAugmented };

struct PseudoSample {
  ImageGrid patch;
  SampleTag tag = SampleTag::Nodule;
  SampleProvenance provenance = SampleProvenance::PositiveBox;
  double fill_ratio = 0.0;  // achieved ratio, FillAugmented only
};

// Box-only pseudo labels: n_neg patches with zero box overlap (tag normal)
// and n_pos random boxes whose intersection exceeds half the annotation box
// area (tag nodule). Patch extents are drawn from [0.5, 1.5] x box extents,
// clamped to the image. Throws DataError when a negative patch cannot be
// placed within 1000 attempts.
std::vector<PseudoSample> mine_pseudo_samples(const ImageGrid& image,
                                              const BoundingBox& box,
                                              int n_pos, int n_neg,
                                              std::uint64_t seed);

// Fills randomly chosen regions of the normalized box patch from `source`
// until the filled fraction first reaches r_target. Tag is nodule when the
// achieved ratio is < 0.5, normal otherwise.
PseudoSample fill_augment(const ImageGrid& normalized_patch,
                          const SuperRegionMap& map, const ImageGrid& source,
                          double r_target, std::uint64_t seed);

struct Scores {
  double nodule = 0.0;
  double normal = 0.0;
};

// Frozen binary nodule/normal classifier. Scoring resizes the patch to the
// trained input extents and scales intensities by 1/norm.
struct Classifier {
  MultiHeadNetwork net;
  Extents input_dims;
  double norm = 255.0;

  Scores score(const ImageGrid& patch) const;
};

struct ClassifierConfig {
  int rank = 2;
  int input_size = 32;  // 32^2 default for 2-D, 24^3 for 3-D
  int epochs = 15;
  int batch = 32;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double holdout = 0.10;
  bool augment = true;  // random flips and 90-degree rotations
  std::uint64_t seed = 0;
};

struct ClassifierReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int train_count = 0;
  int holdout_count = 0;
};

// Softmax cross-entropy + AdamW on a small conv net (3 conv blocks with
// stride-2 pooling, GAP, dense head). Deterministic under a fixed seed.
// Throws DataError when only one class is present.
std::pair<Classifier, ClassifierReport> train_classifier(
    const std::vector<PseudoSample>& samples, const ClassifierConfig& config);

// ASCII sidecar recording input extents and the normalization constant.
void save_classifier(const std::string& model_path, const Classifier& clf);
Classifier load_classifier(const std::string& model_path);

}  // namespace eraseg
