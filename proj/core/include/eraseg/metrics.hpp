#pragma once

#include <span>
#include <vector>

#include "eraseg/grid.hpp"

namespace eraseg {

// Empirical 1-D distribution of intensity values in [0, 255].
struct IntensitySample {
  std::vector<double> values;
};

// First Wasserstein distance between two empirical distributions.
//
// Equal-size samples use exact sorted matching, mean |a_(i) - b_(i)|, which
// is the closed-form 1-D optimal transport cost. Unequal sizes are compared
// on a common grid of 256 quantiles obtained by linear interpolation of the
// empirical inverse CDF; on 8-bit data the grid error is below one intensity
// level. Throws DataError on empty samples.
double wasserstein_1d(const IntensitySample& a, const IntensitySample& b);

// Hot path variant: both spans must already be sorted ascending.
double wasserstein_1d_sorted(std::span<const double> a,
                             std::span<const double> b);

// Overlap scores; both are 1 when both masks are empty.
double dice(const BinaryMask& pred, const BinaryMask& gt);
double jaccard(const BinaryMask& pred, const BinaryMask& gt);

// Surface metrics over boundary cells (foreground cells with at least one
// background face-neighbor; cells outside the grid count as background).
// Distances are Euclidean in pixels/voxels. Throws DataError when either
// mask is empty.
struct SurfaceDistances {
  double hausdorff;
  double asd;
};
SurfaceDistances surface_distances(const BinaryMask& pred, const BinaryMask& gt);

double hausdorff(const BinaryMask& pred, const BinaryMask& gt);
double asd(const BinaryMask& pred, const BinaryMask& gt);

// Boundary cell coordinates (flattened per cell: rank entries each).
std::vector<std::array<int, 3>> boundary_cells(const BinaryMask& mask);

}  // namespace eraseg
