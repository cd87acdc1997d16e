#pragma once

#include <vector>

#include "eraseg/classifier.hpp"
#include "eraseg/grid.hpp"

namespace eraseg {

// Candidate kinds in tie-break order. Up/down run along the row axis,
// left/right along the column axis, forward/backward along the slice axis
// (3-D only); the last three are averaged pairs.
enum class PatchKind {
  Up,
  Down,
  Left,
  Right,
  Forward,
  Backward,
  UpDown,
  LeftRight,
  ForwardBackward,
};

const char* to_string(PatchKind kind);

struct EraserCandidate {
  PatchKind kind;
  ImageGrid patch;            // normalized box extents
  double normal_score = 0.0;  // classifier p(normal)
};

// Neighboring strips of the box, one per available direction, each brought
// to exactly the box extents (thin strips are rescaled by linear
// interpolation). Directions with zero margin are dropped. Results are
// ordered by kind.
std::vector<std::pair<PatchKind, ImageGrid>> extract_basic_patches(
    const ImageGrid& image, const BoundingBox& box);

// Element-wise mean of two same-shaped patches.
ImageGrid combine_patches(const ImageGrid& a, const ImageGrid& b);

// Basic + combined candidates (6 in 2-D, 9 in 3-D when every neighborhood
// exists), all resampled to the normalized box extents.
std::vector<EraserCandidate> make_candidates(const ImageGrid& image,
                                             const BoundingBox& box,
                                             const Extents& normalized_dims);

// Scores every candidate with the classifier's normal-tissue probability
// and returns the argmax; ties resolve in kind order. Throws DataError on
// an empty candidate set.
EraserCandidate select_source(std::vector<EraserCandidate> candidates,
                              const Classifier& classifier);

// Convenience path used by the pipeline: candidates + selection.
EraserCandidate build_eraser_source(const ImageGrid& image,
                                    const BoundingBox& box,
                                    const Extents& normalized_dims,
                                    const Classifier& classifier);

}  // namespace eraseg
