#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "eraseg/grid.hpp"
#include "eraseg/rng.hpp"

using namespace eraseg;

namespace {

ImageGrid random_grid(Extents dims, std::uint64_t seed) {
  ImageGrid g(std::move(dims));
  Rng rng(seed);
  for (double& v : g.data) v = rng.uniform(0.0, 255.0);
  return g;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("crop of the full image is the identity") {
  const ImageGrid g = random_grid({6, 9}, 1);
  BoundingBox box{{0, 0}, {6, 9}};
  const ImageGrid c = crop(g, box);
  CHECK(c.dims == g.dims);
  CHECK(c.data == g.data);
}

TEST_CASE("1x1 crop picks the single value") {
  const ImageGrid g = random_grid({5, 7}, 2);
  BoundingBox box{{3, 4}, {1, 1}};
  const ImageGrid c = crop(g, box);
  REQUIRE(c.size() == 1);
  CHECK(c.data[0] == g.at2(3, 4));
}

TEST_CASE("crop then embed restores the sub-region") {
  ImageGrid g = random_grid({10, 12}, 3);
  const ImageGrid original = g;
  BoundingBox box{{2, 3}, {5, 6}};
  const ImageGrid patch = crop(g, box);
  // Scribble over the region, re-embed, compare element-wise.
  for (double& v : g.data) v = 0.0;
  embed(g, box, patch);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 6; ++c)
      CHECK(g.at2(2 + r, 3 + c) == original.at2(2 + r, 3 + c));
}

TEST_CASE("crop rejects out-of-bounds boxes") {
  const ImageGrid g = random_grid({6, 6}, 4);
  CHECK_THROWS_AS(crop(g, BoundingBox{{3, 3}, {4, 4}}), DataError);
  CHECK_THROWS_AS(crop(g, BoundingBox{{-1, 0}, {3, 3}}), DataError);
}

TEST_CASE("3-D crop/embed round-trip") {
  ImageGrid g = random_grid({5, 6, 7}, 5);
  const ImageGrid original = g;
  BoundingBox box{{1, 2, 0}, {3, 2, 5}};
  const ImageGrid patch = crop(g, box);
  embed(g, box, patch);
  CHECK(g.data == original.data);
}

TEST_CASE("resize_shortest_side hits the target exactly") {
  const ImageGrid g = random_grid({200, 400}, 6);
  const ImageGrid out = resize_shortest_side(g, 100);
  CHECK(out.dims == Extents{100, 200});
}

TEST_CASE("resize_shortest_side keeps already-normalized grids bit-identical") {
  const ImageGrid g = random_grid({100, 150}, 7);
  const ImageGrid out = resize_shortest_side(g, 100);
  CHECK(out.dims == g.dims);
  CHECK(out.data == g.data);
}

TEST_CASE("resize of a constant image stays constant") {
  ImageGrid g({37, 53}, 141.0);
  const ImageGrid out = resize_shortest_side(g, 100);
  for (double v : out.data) CHECK(v == doctest::Approx(141.0).epsilon(1e-12));
}

TEST_CASE("3-D resize keeps aspect ratio") {
  const ImageGrid g = random_grid({50, 100, 75}, 8);
  const ImageGrid out = resize_shortest_side(g, 100);
  CHECK(out.dims == Extents{100, 200, 150});
}

TEST_CASE("pgm round-trip is bit-exact") {
  ImageGrid g = random_grid({14, 23}, 9);
  // Quantize first so that read-back equals what was written.
  for (double& v : g.data) v = static_cast<double>(static_cast<int>(v));
  const std::string path = temp_path("eraseg_test_roundtrip.pgm");
  write_image(path, g);
  const ImageGrid back = read_image(path);
  CHECK(back.dims == g.dims);
  CHECK(back.data == g.data);
  std::filesystem::remove(path);
}

TEST_CASE("flv1 round-trip is bit-exact and sized header+payload") {
  ImageGrid g = random_grid({2, 2, 2}, 10);
  for (double& v : g.data) v = static_cast<double>(static_cast<int>(v));
  const std::string path = temp_path("eraseg_test_roundtrip.flv");
  write_image(path, g);
  const ImageGrid back = read_image(path);
  CHECK(back.dims == g.dims);
  CHECK(back.data == g.data);
  // "FLV1 2 2 2\n" is 11 header bytes followed by 8 raw bytes.
  CHECK(std::filesystem::file_size(path) == 11 + 8);
  std::filesystem::remove(path);
}

TEST_CASE("pgm with maxval other than 255 is rejected") {
  const std::string path = temp_path("eraseg_test_maxval.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n65535\n";
    for (int i = 0; i < 32; ++i) out.put('\0');
  }
  CHECK_THROWS_AS(read_image(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("truncated payload reports the byte offset") {
  const std::string path = temp_path("eraseg_test_trunc.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.put('\x7f');  // 1 of 16 payload bytes
  }
  try {
    read_image(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    // 11 header bytes ("P5\n4 4\n255\n") plus the one payload byte present.
    CHECK(e.byte_offset == 11 + 1);
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed magic is rejected") {
  const std::string path = temp_path("eraseg_test_magic.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n4 4\n255\n";
  }
  CHECK_THROWS_AS(read_image(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("mask round-trip uses 0/255 and maps back to bits") {
  BinaryMask m(Extents{9, 9});
  m.bits[0] = 1;
  m.bits[40] = 1;
  const std::string path = temp_path("eraseg_test_mask.pgm");
  write_mask(path, m);
  const BinaryMask back = read_mask(path);
  CHECK(back.bits == m.bits);
  const ImageGrid raw = read_image(path);
  CHECK(raw.data[0] == 255.0);
  CHECK(raw.data[1] == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("box sidecar round-trip, 2-D and 3-D") {
  const std::string path = temp_path("eraseg_test_box.box");
  for (const BoundingBox& box :
       {BoundingBox{{3, 4}, {10, 12}}, BoundingBox{{1, 2, 3}, {4, 5, 6}}}) {
    write_box(path, box);
    const BoundingBox back = read_box(path);
    CHECK(back.origin == box.origin);
    CHECK(back.extent == box.extent);
  }
  std::filesystem::remove(path);
}

TEST_CASE("grid validation rejects broken invariants") {
  ImageGrid g({4, 4});
  g.data[3] = 300.0;
  CHECK_THROWS_AS(g.validate(), DataError);
  g.data[3] = 10.0;
  g.data.pop_back();
  CHECK_THROWS_AS(g.validate(), DataError);
}

TEST_CASE("nearest-neighbor mask resample keeps a solid block solid") {
  BinaryMask m(Extents{4, 4});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c) m.bits[static_cast<std::size_t>(r) * 4 + c] = 1;
  const BinaryMask up = resample_nearest(m, Extents{8, 8});
  CHECK(up.count() == 32);  // top half stays the top half
  const BinaryMask back = resample_nearest(up, Extents{4, 4});
  CHECK(back.bits == m.bits);
}
