#include "eraseg/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eraseg {

std::vector<std::size_t> SuperRegionMap::region_cells(int id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == id) out.push_back(i);
  return out;
}

namespace {

struct Cluster {
  std::array<double, 3> pos{0.0, 0.0, 0.0};
  double intensity = 0.0;
};

// Face neighbors of a flat index; returns count written into `out`.
int face_neighbors(const Extents& dims, std::size_t flat,
                   std::array<std::size_t, 6>& out) {
  int n = 0;
  if (dims.size() == 2) {
    const int W = dims[1];
    const int r = static_cast<int>(flat) / W;
    const int c = static_cast<int>(flat) % W;
    if (r > 0) out[n++] = flat - static_cast<std::size_t>(W);
    if (r + 1 < dims[0]) out[n++] = flat + static_cast<std::size_t>(W);
    if (c > 0) out[n++] = flat - 1;
    if (c + 1 < W) out[n++] = flat + 1;
  } else {
    const std::size_t plane = static_cast<std::size_t>(dims[1]) * dims[2];
    const int s = static_cast<int>(flat / plane);
    const std::size_t rem = flat % plane;
    const int r = static_cast<int>(rem) / dims[2];
    const int c = static_cast<int>(rem) % dims[2];
    if (s > 0) out[n++] = flat - plane;
    if (s + 1 < dims[0]) out[n++] = flat + plane;
    if (r > 0) out[n++] = flat - static_cast<std::size_t>(dims[2]);
    if (r + 1 < dims[1]) out[n++] = flat + static_cast<std::size_t>(dims[2]);
    if (c > 0) out[n++] = flat - 1;
    if (c + 1 < dims[2]) out[n++] = flat + 1;
  }
  return n;
}

}  // namespace

SuperRegionMap slic(const ImageGrid& image, int n_segment, double compactness,
                    int max_iters) {
  image.validate();
  const std::size_t n_cells = image.size();
  if (n_segment < 1 || static_cast<std::size_t>(n_segment) > n_cells)
    throw ConfigError("slic: n_segment must be in [1, cell count]");
  if (!(compactness > 0.0)) throw ConfigError("slic: compactness must be > 0");

  const int rank = image.rank();
  const double interval =
      std::pow(static_cast<double>(n_cells) / n_segment, 1.0 / rank);

  // Regular grid of seeds, roughly n_segment in total.
  std::vector<int> seeds_per_axis(rank);
  for (int a = 0; a < rank; ++a)
    seeds_per_axis[a] = std::max(
        1, static_cast<int>(std::lround(image.dims[a] / interval)));

  std::vector<Cluster> clusters;
  {
    std::vector<int> idx(rank, 0);
    for (;;) {
      Cluster c;
      for (int a = 0; a < rank; ++a)
        c.pos[a] = (idx[a] + 0.5) * image.dims[a] /
                       static_cast<double>(seeds_per_axis[a]) -
                   0.5;
      std::array<int, 3> cell{0, 0, 0};
      for (int a = 0; a < rank; ++a)
        cell[a] = std::clamp(static_cast<int>(std::lround(c.pos[a])), 0,
                             image.dims[a] - 1);
      c.intensity = rank == 2 ? image.at2(cell[0], cell[1])
                              : image.at3(cell[0], cell[1], cell[2]);
      clusters.push_back(c);
      int axis = rank - 1;
      while (axis >= 0 && ++idx[axis] == seeds_per_axis[axis]) idx[axis--] = 0;
      if (axis < 0) break;
    }
  }

  const double spatial_weight = compactness / interval;
  const double sw2 = spatial_weight * spatial_weight;
  const int reach = std::max(1, static_cast<int>(std::ceil(2.0 * interval)));

  std::vector<int> assign(n_cells, -1);
  std::vector<double> best(n_cells, 0.0);

  for (int iter = 0; iter < max_iters; ++iter) {
    std::fill(best.begin(), best.end(),
              std::numeric_limits<double>::infinity());
    std::fill(assign.begin(), assign.end(), -1);

    for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
      const Cluster& cl = clusters[ci];
      std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
      for (int a = 0; a < rank; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor(cl.pos[a])) - reach);
        hi[a] = std::min(image.dims[a] - 1,
                         static_cast<int>(std::ceil(cl.pos[a])) + reach);
      }
      if (rank == 2) {
        for (int r = lo[0]; r <= hi[0]; ++r) {
          const double dr = r - cl.pos[0];
          for (int c = lo[1]; c <= hi[1]; ++c) {
            const double dc = c - cl.pos[1];
            const std::size_t flat = image.index2(r, c);
            const double di = image.data[flat] - cl.intensity;
            const double d2 = di * di + sw2 * (dr * dr + dc * dc);
            if (d2 < best[flat]) {
              best[flat] = d2;
              assign[flat] = static_cast<int>(ci);
            }
          }
        }
      } else {
        for (int s = lo[0]; s <= hi[0]; ++s) {
          const double ds = s - cl.pos[0];
          for (int r = lo[1]; r <= hi[1]; ++r) {
            const double dr = r - cl.pos[1];
            for (int c = lo[2]; c <= hi[2]; ++c) {
              const double dc = c - cl.pos[2];
              const std::size_t flat = image.index3(s, r, c);
              const double di = image.data[flat] - cl.intensity;
              const double d2 =
                  di * di + sw2 * (ds * ds + dr * dr + dc * dc);
              if (d2 < best[flat]) {
                best[flat] = d2;
                assign[flat] = static_cast<int>(ci);
              }
            }
          }
        }
      }
    }

    // Cells outside every window (possible on degenerate aspect ratios) go
    // to the spatially nearest cluster.
    for (std::size_t flat = 0; flat < n_cells; ++flat) {
      if (assign[flat] >= 0) continue;
      std::array<int, 3> cell{0, 0, 0};
      if (rank == 2) {
        cell[0] = static_cast<int>(flat) / image.dims[1];
        cell[1] = static_cast<int>(flat) % image.dims[1];
      } else {
        const std::size_t plane =
            static_cast<std::size_t>(image.dims[1]) * image.dims[2];
        cell[0] = static_cast<int>(flat / plane);
        cell[1] = static_cast<int>((flat % plane)) / image.dims[2];
        cell[2] = static_cast<int>(flat) % image.dims[2];
      }
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
        double d2 = 0.0;
        for (int a = 0; a < rank; ++a) {
          const double d = cell[a] - clusters[ci].pos[a];
          d2 += d * d;
        }
        if (d2 < nearest) {
          nearest = d2;
          assign[flat] = static_cast<int>(ci);
        }
      }
    }

    if (iter + 1 == max_iters) break;

    // Recenter clusters on their members.
    std::vector<std::array<double, 4>> acc(clusters.size(),
                                           {0.0, 0.0, 0.0, 0.0});
    std::vector<double> isum(clusters.size(), 0.0);
    std::array<int, 3> cell{0, 0, 0};
    std::size_t flat = 0;
    Extents idx(static_cast<std::size_t>(rank), 0);
    for (;;) {
      const int ci = assign[flat];
      auto& a = acc[ci];
      for (int ax = 0; ax < rank; ++ax) a[ax] += idx[ax];
      a[3] += 1.0;
      isum[ci] += image.data[flat];
      ++flat;
      int axis = rank - 1;
      while (axis >= 0 && ++idx[axis] == image.dims[axis]) idx[axis--] = 0;
      if (axis < 0) break;
    }
    for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
      if (acc[ci][3] == 0.0) continue;  // empty cluster keeps its seed
      for (int a = 0; a < rank; ++a) clusters[ci].pos[a] = acc[ci][a] / acc[ci][3];
      clusters[ci].intensity = isum[ci] / acc[ci][3];
    }
  }

  // Connected components of equal assignment (face connectivity).
  std::vector<int> comp(n_cells, -1);
  std::vector<std::size_t> comp_size;
  std::vector<std::size_t> stack;
  std::array<std::size_t, 6> nb{};
  for (std::size_t start = 0; start < n_cells; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(comp_size.size());
    comp[start] = id;
    stack.assign(1, start);
    std::size_t size = 0;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const int nn = face_neighbors(image.dims, cur, nb);
      for (int i = 0; i < nn; ++i) {
        const std::size_t nxt = nb[i];
        if (comp[nxt] < 0 && assign[nxt] == assign[cur]) {
          comp[nxt] = id;
          stack.push_back(nxt);
        }
      }
    }
    comp_size.push_back(size);
  }

  // Adjacency between components.
  const std::size_t n_comp = comp_size.size();
  std::vector<std::vector<int>> adjacency(n_comp);
  for (std::size_t flat = 0; flat < n_cells; ++flat) {
    const int nn = face_neighbors(image.dims, flat, nb);
    for (int i = 0; i < nn; ++i) {
      const int a = comp[flat], b = comp[nb[i]];
      if (a != b) {
        auto& list = adjacency[a];
        if (std::find(list.begin(), list.end(), b) == list.end())
          list.push_back(b);
      }
    }
  }

  // Merge fragments below 25% of the mean region size into their largest
  // face-adjacent neighbor (union-find; sizes tracked at the roots).
  const double min_size =
      0.25 * static_cast<double>(n_cells) / static_cast<double>(n_segment);
  std::vector<int> parent(n_comp);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> root_size = comp_size;
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  std::vector<int> order(n_comp);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return comp_size[a] != comp_size[b] ? comp_size[a] < comp_size[b] : a < b;
  });
  for (int c : order) {
    const int root = find(c);
    if (static_cast<double>(root_size[root]) >= min_size) continue;
    int target = -1;
    std::size_t target_size = 0;
    for (int nb_comp : adjacency[c]) {
      const int nb_root = find(nb_comp);
      if (nb_root == root) continue;
      if (root_size[nb_root] > target_size ||
          (root_size[nb_root] == target_size && nb_root < target)) {
        target = nb_root;
        target_size = root_size[nb_root];
      }
    }
    if (target < 0) continue;  // isolated component, keep it
    parent[root] = target;
    root_size[target] += root_size[root];
  }

  // Dense relabel in scan order of first occurrence.
  SuperRegionMap map;
  map.dims = image.dims;
  map.labels.assign(n_cells, -1);
  map.n_segment_requested = n_segment;
  std::vector<int> region_of_root(n_comp, -1);
  for (std::size_t flat = 0; flat < n_cells; ++flat) {
    const int root = find(comp[flat]);
    if (region_of_root[root] < 0) {
      region_of_root[root] = static_cast<int>(map.regions.size());
      SuperRegion region;
      region.id = region_of_root[root];
      map.regions.push_back(region);
    }
    map.labels[flat] = region_of_root[root];
  }

  // Region metadata.
  {
    std::size_t flat = 0;
    Extents idx(static_cast<std::size_t>(rank), 0);
    for (;;) {
      SuperRegion& region = map.regions[map.labels[flat]];
      region.cells += 1;
      for (int a = 0; a < rank; ++a) region.centroid[a] += idx[a];
      region.mean_intensity += image.data[flat];
      ++flat;
      int axis = rank - 1;
      while (axis >= 0 && ++idx[axis] == image.dims[axis]) idx[axis--] = 0;
      if (axis < 0) break;
    }
    for (SuperRegion& region : map.regions) {
      const double inv = 1.0 / static_cast<double>(region.cells);
      for (int a = 0; a < rank; ++a) region.centroid[a] *= inv;
      region.mean_intensity *= inv;
    }
  }
  return map;
}

std::vector<int> traversal_order(SuperRegionMap& map,
                                 const std::array<double, 3>& center) {
  const int rank = static_cast<int>(map.dims.size());
  std::vector<double> dist(map.regions.size());
  for (std::size_t i = 0; i < map.regions.size(); ++i) {
    double d2 = 0.0;
    for (int a = 0; a < rank; ++a) {
      const double d = map.regions[i].centroid[a] - center[a];
      d2 += d * d;
    }
    dist[i] = std::sqrt(d2);
  }
  std::vector<int> order(map.regions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  for (std::size_t rank_i = 0; rank_i < order.size(); ++rank_i)
    map.regions[order[rank_i]].traversal_rank = static_cast<int>(rank_i);
  return order;
}

std::vector<std::vector<int>> partition_among_agents(const SuperRegionMap& map,
                                                     int k) {
  const int R = map.region_count();
  if (k < 1 || k > R)
    throw ConfigError("partition_among_agents: need 1 <= k <= region count");

  int longest_axis = 0;
  for (std::size_t a = 1; a < map.dims.size(); ++a)
    if (map.dims[a] > map.dims[longest_axis]) longest_axis = static_cast<int>(a);

  std::vector<int> order(static_cast<std::size_t>(R));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ca = map.regions[a].centroid[longest_axis];
    const double cb = map.regions[b].centroid[longest_axis];
    return ca != cb ? ca < cb : a < b;
  });

  std::vector<std::vector<int>> lists(static_cast<std::size_t>(k));
  const int base = R / k;
  const int rem = R % k;
  std::size_t cursor = 0;
  for (int i = 0; i < k; ++i) {
    const int take = base + (i < rem ? 1 : 0);
    lists[i].assign(order.begin() + cursor, order.begin() + cursor + take);
    cursor += static_cast<std::size_t>(take);
  }
  return lists;
}

void region_fill_inplace(ImageGrid& image, const SuperRegionMap& map,
                         int region_id, const ImageGrid& source) {
  if (source.dims != image.dims)
    throw DataError("region_fill: source dims differ from image dims");
  if (map.dims != image.dims)
    throw DataError("region_fill: map dims differ from image dims");
  if (region_id < 0 || region_id >= map.region_count())
    throw DataError("region_fill: region id out of range");
  for (std::size_t i = 0; i < map.labels.size(); ++i)
    if (map.labels[i] == region_id) image.data[i] = source.data[i];
}

ImageGrid region_fill(const ImageGrid& image, const SuperRegionMap& map,
                      int region_id, const ImageGrid& source) {
  ImageGrid out = image;
  region_fill_inplace(out, map, region_id, source);
  return out;
}

ImageGrid label_view(const SuperRegionMap& map) {
  ImageGrid out(map.dims);
  for (std::size_t i = 0; i < map.labels.size(); ++i)
    out.data[i] = static_cast<double>(map.labels[i] % 256);
  return out;
}

}  // namespace eraseg
