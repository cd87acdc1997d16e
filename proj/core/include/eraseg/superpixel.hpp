#pragma once

#include <array>
#include <vector>

#include "eraseg/grid.hpp"

namespace eraseg {

struct SuperRegion {
  int id = 0;
  std::size_t cells = 0;
  std::array<double, 3> centroid{0.0, 0.0, 0.0};  // index coords, unused axes 0
  double mean_intensity = 0.0;
  int traversal_rank = -1;  // set by traversal_order
};

// Partition of a grid into connected superpixels/supervoxels with dense ids.
struct SuperRegionMap {
  Extents dims;
  std::vector<int> labels;  // per-cell region id in 0..R-1
  std::vector<SuperRegion> regions;
  int n_segment_requested = 0;

  int region_count() const { return static_cast<int>(regions.size()); }
  std::size_t size() const { return labels.size(); }

  // Cells of one region, in scan order.
  std::vector<std::size_t> region_cells(int id) const;
};

// SLIC: k-means in (intensity, spatial * compactness / grid_interval)
// feature space seeded on a regular grid, then a connectivity pass that
// merges fragments below 25% of the mean region size into their largest
// face-adjacent neighbor. 6-connectivity in 3-D.
SuperRegionMap slic(const ImageGrid& image, int n_segment,
                    double compactness = 10.0, int max_iters = 10);

// Region ids sorted by ascending centroid distance to `center` (ties to the
// smaller id); ranks are written back into the map.
std::vector<int> traversal_order(SuperRegionMap& map,
                                 const std::array<double, 3>& center);

// Splits regions into k spatially contiguous slabs along the longest axis
// by centroid coordinate, rebalanced so list sizes differ by at most one.
std::vector<std::vector<int>> partition_among_agents(const SuperRegionMap& map,
                                                     int k);

// Copy of `image` with the region's cells taken from `source`.
ImageGrid region_fill(const ImageGrid& image, const SuperRegionMap& map,
                      int region_id, const ImageGrid& source);
void region_fill_inplace(ImageGrid& image, const SuperRegionMap& map,
                         int region_id, const ImageGrid& source);

// Debug view of labels as intensities (id mod 256).
ImageGrid label_view(const SuperRegionMap& map);

}  // namespace eraseg
