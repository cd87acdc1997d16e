#include "eraseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eraseg {

namespace {

constexpr int kQuantiles = 256;

// Linear interpolation of the empirical inverse CDF of a sorted sample at
// probability p in [0, 1].
double quantile(std::span<const double> sorted, double p) {
  const double n = static_cast<double>(sorted.size());
  double t = p * n - 0.5;
  if (t <= 0.0) return sorted.front();
  const double max_t = n - 1.0;
  if (t >= max_t) return sorted.back();
  const std::size_t lo = static_cast<std::size_t>(t);
  const double frac = t - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

double wasserstein_1d_sorted(std::span<const double> a,
                             std::span<const double> b) {
  if (a.empty() || b.empty())
    throw DataError("wasserstein_1d: empty sample");
  if (a.size() == b.size()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
  }
  double sum = 0.0;
  for (int j = 0; j < kQuantiles; ++j) {
    const double p = (static_cast<double>(j) + 0.5) / kQuantiles;
    sum += std::abs(quantile(a, p) - quantile(b, p));
  }
  return sum / kQuantiles;
}

double wasserstein_1d(const IntensitySample& a, const IntensitySample& b) {
  std::vector<double> sa = a.values;
  std::vector<double> sb = b.values;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return wasserstein_1d_sorted(sa, sb);
}

namespace {

struct OverlapCounts {
  std::size_t both = 0;
  std::size_t pred_only = 0;
  std::size_t gt_only = 0;
};

OverlapCounts overlap(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.dims != gt.dims)
    throw DataError("mask metric: dims mismatch");
  OverlapCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    c.both += (p && g) ? 1 : 0;
    c.pred_only += (p && !g) ? 1 : 0;
    c.gt_only += (!p && g) ? 1 : 0;
  }
  return c;
}

}  // namespace

double dice(const BinaryMask& pred, const BinaryMask& gt) {
  const OverlapCounts c = overlap(pred, gt);
  const std::size_t denom = 2 * c.both + c.pred_only + c.gt_only;
  if (denom == 0) return 1.0;  // both masks empty
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(denom);
}

double jaccard(const BinaryMask& pred, const BinaryMask& gt) {
  const OverlapCounts c = overlap(pred, gt);
  const std::size_t denom = c.both + c.pred_only + c.gt_only;
  if (denom == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(denom);
}

std::vector<std::array<int, 3>> boundary_cells(const BinaryMask& mask) {
  std::vector<std::array<int, 3>> out;
  const int rank = mask.rank();
  auto fg = [&](const std::array<int, 3>& q) {
    for (int a = 0; a < rank; ++a)
      if (q[a] < 0 || q[a] >= mask.dims[a]) return false;  // outside = bg
    std::size_t flat = 0;
    for (int a = 0; a < rank; ++a)
      flat = flat * static_cast<std::size_t>(mask.dims[a]) + q[a];
    return mask.bits[flat] != 0;
  };

  std::array<int, 3> idx{0, 0, 0};
  std::size_t flat = 0;
  for (;;) {
    if (mask.bits[flat] != 0) {
      bool boundary = false;
      for (int a = 0; a < rank && !boundary; ++a) {
        std::array<int, 3> q = idx;
        q[a] = idx[a] - 1;
        if (!fg(q)) boundary = true;
        q[a] = idx[a] + 1;
        if (!fg(q)) boundary = true;
      }
      if (boundary) out.push_back(idx);
    }
    ++flat;
    int axis = rank - 1;
    while (axis >= 0 && ++idx[axis] == mask.dims[axis]) idx[axis--] = 0;
    if (axis < 0) break;
  }
  return out;
}

namespace {

// Directed distances from each cell in `from` to the nearest cell of `to`.
// Pairwise with an incremental best-so-far cutoff; boundary sets at desk
// scale stay in the low thousands.
std::vector<double> directed_distances(
    const std::vector<std::array<int, 3>>& from,
    const std::vector<std::array<int, 3>>& to, int rank) {
  std::vector<double> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::max();
    for (const auto& q : to) {
      double d2 = 0.0;
      for (int a = 0; a < rank; ++a) {
        const double d = static_cast<double>(from[i][a] - q[a]);
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        if (best == 0.0) break;
      }
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

}  // namespace

SurfaceDistances surface_distances(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.dims != gt.dims) throw DataError("surface metric: dims mismatch");
  if (pred.count() == 0 || gt.count() == 0)
    throw DataError("surface metric undefined for empty masks");

  const auto bp = boundary_cells(pred);
  const auto bg = boundary_cells(gt);
  const int rank = pred.rank();

  const auto d_pg = directed_distances(bp, bg, rank);
  const auto d_gp = directed_distances(bg, bp, rank);

  double hd = 0.0;
  double mean_pg = 0.0, mean_gp = 0.0;
  for (double d : d_pg) {
    hd = std::max(hd, d);
    mean_pg += d;
  }
  for (double d : d_gp) {
    hd = std::max(hd, d);
    mean_gp += d;
  }
  mean_pg /= static_cast<double>(d_pg.size());
  mean_gp /= static_cast<double>(d_gp.size());

  return SurfaceDistances{hd, 0.5 * (mean_pg + mean_gp)};
}

double hausdorff(const BinaryMask& pred, const BinaryMask& gt) {
  return surface_distances(pred, gt).hausdorff;
}

double asd(const BinaryMask& pred, const BinaryMask& gt) {
  return surface_distances(pred, gt).asd;
}

}  // namespace eraseg
