#include <doctest.h>

#include "eraseg/synthetic.hpp"

using namespace eraseg;

namespace {

SyntheticSpec desk_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dims = {128, 128};
  spec.radius_min = 14.0;
  spec.radius_max = 26.0;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("same spec twice gives bit-identical output") {
  const SyntheticSample a = generate_synthetic(desk_spec(7));
  const SyntheticSample b = generate_synthetic(desk_spec(7));
  CHECK(a.image.data == b.image.data);
  CHECK(a.mask.bits == b.mask.bits);
  CHECK(a.box.origin == b.box.origin);
  CHECK(a.box.extent == b.box.extent);
}

TEST_CASE("zero noise and constant means give exactly the means") {
  SyntheticSpec spec = desk_spec(3);
  spec.noise = 0.0;
  spec.fg_mean_min = spec.fg_mean_max = 60.0;
  spec.bg_mean_min = spec.bg_mean_max = 170.0;
  const SyntheticSample s = generate_synthetic(spec);
  for (std::size_t i = 0; i < s.image.size(); ++i)
    CHECK(s.image.data[i] == (s.mask.bits[i] ? 60.0 : 170.0));
}

TEST_CASE("box is the tight bounding box of the mask") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const SyntheticSample s = generate_synthetic(desk_spec(seed));
    Extents lo(s.mask.dims.size(), 1 << 20), hi(s.mask.dims.size(), -1);
    for (int r = 0; r < s.mask.dims[0]; ++r)
      for (int c = 0; c < s.mask.dims[1]; ++c)
        if (s.mask.bits[static_cast<std::size_t>(r) * s.mask.dims[1] + c]) {
          lo[0] = std::min(lo[0], r);
          lo[1] = std::min(lo[1], c);
          hi[0] = std::max(hi[0], r);
          hi[1] = std::max(hi[1], c);
        }
    CHECK(s.box.origin == lo);
    CHECK(s.box.extent == Extents{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1});
  }
}

TEST_CASE("mask fills 10..95 percent of its box") {
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const SyntheticSample s = generate_synthetic(desk_spec(seed));
    const double fill = static_cast<double>(s.mask.count()) /
                        static_cast<double>(s.box.volume());
    CHECK(fill >= 0.10);
    CHECK(fill <= 0.95);
  }
}

TEST_CASE("intensities stay within range and image validates") {
  const SyntheticSample s = generate_synthetic(desk_spec(11));
  CHECK_NOTHROW(s.image.validate());
}

TEST_CASE("3-D generation works") {
  SyntheticSpec spec;
  spec.dims = {48, 48, 48};
  spec.radius_min = 8.0;
  spec.radius_max = 14.0;
  spec.seed = 5;
  const SyntheticSample s = generate_synthetic(spec);
  CHECK(s.mask.count() > 0);
  CHECK(s.box.origin.size() == 3);
  CHECK_NOTHROW(s.image.validate());
}

TEST_CASE("impossible configurations are rejected") {
  SyntheticSpec spec = desk_spec(1);
  spec.radius_max = 200.0;  // cannot fit inside 128 pixels
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);

  SyntheticSpec overlap = desk_spec(1);
  overlap.fg_mean_min = 100.0;
  overlap.fg_mean_max = 150.0;
  overlap.bg_mean_min = 120.0;
  overlap.bg_mean_max = 180.0;
  CHECK_THROWS_AS(generate_synthetic(overlap), ConfigError);
}

TEST_CASE("nodules are darker than background by default") {
  const SyntheticSample s = generate_synthetic(desk_spec(13));
  double fg_sum = 0.0, bg_sum = 0.0;
  std::size_t fg_n = 0, bg_n = 0;
  for (std::size_t i = 0; i < s.image.size(); ++i) {
    if (s.mask.bits[i]) {
      fg_sum += s.image.data[i];
      ++fg_n;
    } else {
      bg_sum += s.image.data[i];
      ++bg_n;
    }
  }
  CHECK(fg_sum / fg_n < bg_sum / bg_n);
}
