#include "eraseg/eraser.hpp"

#include <algorithm>

namespace eraseg {

const char* to_string(PatchKind kind) {
  switch (kind) {
    case PatchKind::Up: return "up";
    case PatchKind::Down: return "down";
    case PatchKind::Left: return "left";
    case PatchKind::Right: return "right";
    case PatchKind::Forward: return "forward";
    case PatchKind::Backward: return "backward";
    case PatchKind::UpDown: return "ud";
    case PatchKind::LeftRight: return "lr";
    case PatchKind::ForwardBackward: return "fb";
  }
  return "?";
}

namespace {

// Strip adjacent to the box on the given side of `axis`. Thickness is
// min(box extent, available margin); zero margin yields no patch.
bool adjacent_strip(const ImageGrid& image, const BoundingBox& box, int axis,
                    bool negative_side, ImageGrid& out) {
  const int margin = negative_side
                         ? box.origin[axis]
                         : image.dims[axis] - box.origin[axis] - box.extent[axis];
  if (margin <= 0) return false;
  const int thickness = std::min(box.extent[axis], margin);

  BoundingBox strip;
  strip.origin = box.origin;
  strip.extent = box.extent;
  strip.extent[axis] = thickness;
  strip.origin[axis] = negative_side ? box.origin[axis] - thickness
                                     : box.origin[axis] + box.extent[axis];

  // crop() rejects extents < 4; thin strips are taken manually.
  ImageGrid raw(strip.extent);
  if (image.rank() == 2) {
    for (int r = 0; r < strip.extent[0]; ++r)
      for (int c = 0; c < strip.extent[1]; ++c)
        raw.at2(r, c) = image.at2(strip.origin[0] + r, strip.origin[1] + c);
  } else {
    for (int s = 0; s < strip.extent[0]; ++s)
      for (int r = 0; r < strip.extent[1]; ++r)
        for (int c = 0; c < strip.extent[2]; ++c)
          raw.at3(s, r, c) = image.at3(strip.origin[0] + s, strip.origin[1] + r,
                                       strip.origin[2] + c);
  }
  out = thickness == box.extent[axis] ? std::move(raw)
                                      : resample(raw, box.extent);
  return true;
}

}  // namespace

std::vector<std::pair<PatchKind, ImageGrid>> extract_basic_patches(
    const ImageGrid& image, const BoundingBox& box) {
  box.validate_annotation(image.dims);
  const bool is3d = image.rank() == 3;
  const int row_axis = is3d ? 1 : 0;
  const int col_axis = is3d ? 2 : 1;

  std::vector<std::pair<PatchKind, ImageGrid>> out;
  ImageGrid patch;
  if (adjacent_strip(image, box, row_axis, true, patch))
    out.emplace_back(PatchKind::Up, std::move(patch));
  if (adjacent_strip(image, box, row_axis, false, patch))
    out.emplace_back(PatchKind::Down, std::move(patch));
  if (adjacent_strip(image, box, col_axis, true, patch))
    out.emplace_back(PatchKind::Left, std::move(patch));
  if (adjacent_strip(image, box, col_axis, false, patch))
    out.emplace_back(PatchKind::Right, std::move(patch));
  if (is3d) {
    if (adjacent_strip(image, box, 0, true, patch))
      out.emplace_back(PatchKind::Forward, std::move(patch));
    if (adjacent_strip(image, box, 0, false, patch))
      out.emplace_back(PatchKind::Backward, std::move(patch));
  }
  return out;
}

ImageGrid combine_patches(const ImageGrid& a, const ImageGrid& b) {
  if (a.dims != b.dims) throw DataError("combine_patches: dims mismatch");
  ImageGrid out(a.dims);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data[i] = 0.5 * (a.data[i] + b.data[i]);
  return out;
}

std::vector<EraserCandidate> make_candidates(const ImageGrid& image,
                                             const BoundingBox& box,
                                             const Extents& normalized_dims) {
  auto basics = extract_basic_patches(image, box);
  auto find = [&](PatchKind kind) -> const ImageGrid* {
    for (const auto& [k, patch] : basics)
      if (k == kind) return &patch;
    return nullptr;
  };

  std::vector<EraserCandidate> out;
  for (const auto& [kind, patch] : basics)
    out.push_back(EraserCandidate{kind, resample(patch, normalized_dims), 0.0});

  auto add_combined = [&](PatchKind a, PatchKind b, PatchKind combined) {
    const ImageGrid* pa = find(a);
    const ImageGrid* pb = find(b);
    if (pa && pb)
      out.push_back(EraserCandidate{
          combined, resample(combine_patches(*pa, *pb), normalized_dims), 0.0});
  };
  add_combined(PatchKind::Up, PatchKind::Down, PatchKind::UpDown);
  add_combined(PatchKind::Left, PatchKind::Right, PatchKind::LeftRight);
  if (image.rank() == 3)
    add_combined(PatchKind::Forward, PatchKind::Backward,
                 PatchKind::ForwardBackward);

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return out;
}

EraserCandidate select_source(std::vector<EraserCandidate> candidates,
                              const Classifier& classifier) {
  if (candidates.empty())
    throw DataError("select_source: no candidates (box fills the image)");
  for (EraserCandidate& c : candidates)
    c.normal_score = classifier.score(c.patch).normal;
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const bool higher = candidates[i].normal_score > candidates[best].normal_score;
    const bool tie_earlier_kind =
        candidates[i].normal_score == candidates[best].normal_score &&
        static_cast<int>(candidates[i].kind) < static_cast<int>(candidates[best].kind);
    if (higher || tie_earlier_kind) best = i;
  }
  return candidates[best];
}

EraserCandidate build_eraser_source(const ImageGrid& image,
                                    const BoundingBox& box,
                                    const Extents& normalized_dims,
                                    const Classifier& classifier) {
  return select_source(make_candidates(image, box, normalized_dims), classifier);
}

}  // namespace eraseg
