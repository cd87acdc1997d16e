#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "eraseg/error.hpp"

namespace eraseg {

// Extents are listed slowest-varying first: a 2-D grid is (rows, cols),
// a 3-D grid is (slices, rows, cols). Data is row-major.
using Extents = std::vector<int>;

std::size_t cell_count(const Extents& dims);

// N-dimensional grayscale intensity grid. Values live in [0, 255]; they are
// kept as doubles so interpolation does not lose precision, and re-quantized
// to 8 bits on write.
struct ImageGrid {
  Extents dims;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(Extents d, double fill = 0.0)
      : dims(std::move(d)), data(cell_count(dims), fill) {}

  int rank() const { return static_cast<int>(dims.size()); }
  std::size_t size() const { return data.size(); }

  std::size_t index2(int r, int c) const {
    return static_cast<std::size_t>(r) * dims[1] + c;
  }
  std::size_t index3(int s, int r, int c) const {
    return (static_cast<std::size_t>(s) * dims[1] + r) * dims[2] + c;
  }

  double& at2(int r, int c) { return data[index2(r, c)]; }
  double at2(int r, int c) const { return data[index2(r, c)]; }
  double& at3(int s, int r, int c) { return data[index3(s, r, c)]; }
  double at3(int s, int r, int c) const { return data[index3(s, r, c)]; }

  // Throws DataError when the container invariants are broken.
  void validate() const;
};

// Axis-aligned box given by per-axis start index and length.
struct BoundingBox {
  Extents origin;
  Extents extent;

  int rank() const { return static_cast<int>(origin.size()); }
  std::size_t volume() const { return cell_count(extent); }

  // Box must sit inside a grid of the given dims (extent >= 1).
  void validate_within(const Extents& dims) const;
  // Annotation boxes additionally require extent >= 4 per axis.
  void validate_annotation(const Extents& dims) const;
};

// One foreground/background flag per cell.
struct BinaryMask {
  Extents dims;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  explicit BinaryMask(Extents d, std::uint8_t fill = 0)
      : dims(std::move(d)), bits(cell_count(dims), fill) {}

  int rank() const { return static_cast<int>(dims.size()); }
  std::size_t size() const { return bits.size(); }
  std::size_t count() const;
};

// Sub-grid of exactly the box extents.
ImageGrid crop(const ImageGrid& image, const BoundingBox& box);

// Writes `patch` into `target` at the box position (inverse of crop).
void embed(ImageGrid& target, const BoundingBox& box, const ImageGrid& patch);
void embed(BinaryMask& target, const BoundingBox& box, const BinaryMask& patch);

// Linear (bilinear/trilinear) resample to arbitrary output extents.
ImageGrid resample(const ImageGrid& image, const Extents& out_dims);

// Nearest-neighbor resample, used to map predicted masks back to native
// resolution.
BinaryMask resample_nearest(const BinaryMask& mask, const Extents& out_dims);

// Extents after shortest-side normalization: the shortest axis becomes
// exactly `target`, the others scale by the same factor (rounded, min 1).
Extents normalized_extents(const Extents& dims, int target);

// Shortest-side normalization of a grid; identical grid when the shortest
// side already equals `target`.
ImageGrid resize_shortest_side(const ImageGrid& image, int target = 100);

// 2-D grids use binary PGM (P5, maxval 255). 3-D grids use the FLV1 raw
// format: one ASCII header line "FLV1 <d0> <d1> <d2>\n" followed by
// d0*d1*d2 intensity bytes in row-major order. Reads dispatch on the magic.
ImageGrid read_image(const std::string& path);
void write_image(const std::string& path, const ImageGrid& image);

// Masks share the image formats with values 0/255; reading maps nonzero->1.
BinaryMask read_mask(const std::string& path);
void write_mask(const std::string& path, const BinaryMask& mask);

// ASCII box sidecar: one line "origin... extent...", axis order matching
// the image dims.
BoundingBox read_box(const std::string& path);
void write_box(const std::string& path, const BoundingBox& box);

}  // namespace eraseg
