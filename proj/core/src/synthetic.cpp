#include "eraseg/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "eraseg/rng.hpp"

namespace eraseg {

namespace {

constexpr int kBumpCount = 6;
constexpr double kBumpSharpness = 4.0;
constexpr int kPlacementAttempts = 200;

struct Bump {
  std::array<double, 3> dir;
  double weight;
};

struct Nodule {
  std::array<double, 3> center;
  double radius;
  std::array<Bump, kBumpCount> bumps;
};

std::array<double, 3> random_unit(Rng& rng, int rank) {
  std::array<double, 3> v{0.0, 0.0, 0.0};
  double norm = 0.0;
  while (norm < 1e-6) {
    norm = 0.0;
    for (int a = 0; a < rank; ++a) {
      v[a] = rng.normal();
      norm += v[a] * v[a];
    }
    norm = std::sqrt(norm);
  }
  for (int a = 0; a < rank; ++a) v[a] /= norm;
  return v;
}

// Radius modulation in [1-a, 1+a]: a handful of smooth directional lobes.
// The same construction works in 2-D and 3-D.
double radius_modulation(const Nodule& nodule, const std::array<double, 3>& dir,
                         double amplitude) {
  double sum = 0.0;
  for (const Bump& b : nodule.bumps) {
    const double dot = dir[0] * b.dir[0] + dir[1] * b.dir[1] + dir[2] * b.dir[2];
    sum += b.weight * std::exp(kBumpSharpness * (dot - 1.0));
  }
  return 1.0 + amplitude * std::clamp(sum, -1.0, 1.0);
}

bool inside_nodule(const Nodule& nodule, const std::array<double, 3>& pos,
                   int rank, double amplitude) {
  std::array<double, 3> delta{0.0, 0.0, 0.0};
  double dist2 = 0.0;
  for (int a = 0; a < rank; ++a) {
    delta[a] = pos[a] - nodule.center[a];
    dist2 += delta[a] * delta[a];
  }
  if (dist2 < 1e-12) return true;
  const double dist = std::sqrt(dist2);
  for (int a = 0; a < rank; ++a) delta[a] /= dist;
  return dist <= nodule.radius * radius_modulation(nodule, delta, amplitude);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (dims.size() != 2 && dims.size() != 3)
    throw ConfigError("synthetic: dims must have 2 or 3 entries");
  for (int d : dims)
    if (d < 8) throw ConfigError("synthetic: image extents must be >= 8");
  if (nodule_count_min < 1 || nodule_count_max < nodule_count_min)
    throw ConfigError("synthetic: bad nodule count range");
  if (!(radius_min > 0.0) || radius_max < radius_min)
    throw ConfigError("synthetic: bad radius range");
  if (!(irregularity >= 0.0 && irregularity <= 0.9))
    throw ConfigError("synthetic: irregularity must be in [0, 0.9]");
  if (noise < 0.0) throw ConfigError("synthetic: noise must be >= 0");

  auto band_ok = [](double lo, double hi) {
    return lo >= 0.0 && hi <= 255.0 && hi >= lo;
  };
  if (!band_ok(fg_mean_min, fg_mean_max) || !band_ok(bg_mean_min, bg_mean_max))
    throw ConfigError("synthetic: intensity bands must lie within [0, 255]");
  const bool fg_below = fg_mean_max + mean_margin <= bg_mean_min;
  const bool bg_below = bg_mean_max + mean_margin <= fg_mean_min;
  if (!fg_below && !bg_below)
    throw ConfigError("synthetic: intensity bands must be disjoint by the margin");

  const int margin =
      static_cast<int>(std::ceil(radius_max * (1.0 + irregularity))) + 1;
  for (int d : dims)
    if (2 * margin + 1 > d)
      throw ConfigError("synthetic: nodule radius range does not fit the image");
}

SyntheticSample generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int rank = static_cast<int>(spec.dims.size());
  Rng rng(spec.seed);

  const double fg_mean = rng.uniform(spec.fg_mean_min, spec.fg_mean_max);
  const double bg_mean = rng.uniform(spec.bg_mean_min, spec.bg_mean_max);
  const int count = rng.uniform_int(spec.nodule_count_min, spec.nodule_count_max);

  const std::size_t n = cell_count(spec.dims);

  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    std::vector<Nodule> nodules(static_cast<std::size_t>(count));
    for (Nodule& nodule : nodules) {
      nodule.radius = rng.uniform(spec.radius_min, spec.radius_max);
      const int margin = static_cast<int>(
                             std::ceil(nodule.radius * (1.0 + spec.irregularity))) +
                         1;
      for (int a = 0; a < rank; ++a)
        nodule.center[a] =
            rng.uniform(static_cast<double>(margin),
                        static_cast<double>(spec.dims[a] - 1 - margin));
      for (Bump& b : nodule.bumps) {
        b.dir = random_unit(rng, rank);
        b.weight = rng.uniform(-1.0, 1.0);
      }
    }

    BinaryMask mask(spec.dims);
    Extents lo(spec.dims.size()), hi(spec.dims.size(), -1);
    for (std::size_t a = 0; a < spec.dims.size(); ++a) lo[a] = spec.dims[a];

    std::array<double, 3> pos{0.0, 0.0, 0.0};
    std::size_t flat = 0;
    Extents idx(spec.dims.size(), 0);
    for (;;) {
      for (std::size_t a = 0; a < idx.size(); ++a) pos[a] = idx[a];
      bool fg = false;
      for (const Nodule& nodule : nodules)
        if (inside_nodule(nodule, pos, rank, spec.irregularity)) {
          fg = true;
          break;
        }
      if (fg) {
        mask.bits[flat] = 1;
        for (std::size_t a = 0; a < idx.size(); ++a) {
          lo[a] = std::min(lo[a], idx[a]);
          hi[a] = std::max(hi[a], idx[a]);
        }
      }
      ++flat;
      int axis = static_cast<int>(idx.size()) - 1;
      while (axis >= 0 && ++idx[axis] == spec.dims[axis]) idx[axis--] = 0;
      if (axis < 0) break;
    }

    const std::size_t mask_cells = mask.count();
    if (mask_cells == 0) continue;

    BoundingBox box;
    box.origin = lo;
    box.extent.resize(lo.size());
    bool extent_ok = true;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      box.extent[a] = hi[a] - lo[a] + 1;
      if (box.extent[a] < 4) extent_ok = false;
    }
    if (!extent_ok) continue;

    const double fill =
        static_cast<double>(mask_cells) / static_cast<double>(box.volume());
    if (fill < 0.10 || fill > 0.95) continue;

    ImageGrid image(spec.dims);
    for (std::size_t i = 0; i < n; ++i) {
      const double mean = mask.bits[i] ? fg_mean : bg_mean;
      const double speckle =
          spec.noise > 0.0 ? 1.0 + spec.noise * rng.normal() : 1.0;
      image.data[i] = std::clamp(mean * speckle, 0.0, 255.0);
    }
    return SyntheticSample{std::move(image), std::move(mask), std::move(box)};
  }

  throw ConfigError("synthetic: no valid nodule placement after " +
                    std::to_string(kPlacementAttempts) + " attempts");
}

}  // namespace eraseg
