#include <doctest.h>

#include <algorithm>

#include "eraseg/metrics.hpp"
#include "eraseg/rng.hpp"
#include "support/oracles.hpp"

using namespace eraseg;

namespace {

IntensitySample sample_of(std::initializer_list<double> values) {
  return IntensitySample{std::vector<double>(values)};
}

IntensitySample random_sample(Rng& rng, std::size_t n) {
  IntensitySample s;
  s.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    s.values.push_back(static_cast<double>(rng.uniform_int(0, 255)));
  return s;
}

BinaryMask mask_from(const Extents& dims, std::initializer_list<int> cells) {
  BinaryMask m(dims);
  for (int c : cells) m.bits[static_cast<std::size_t>(c)] = 1;
  return m;
}

}  // namespace

TEST_CASE("wasserstein of identical samples is zero") {
  const IntensitySample a = sample_of({3, 9, 9, 120});
  CHECK(wasserstein_1d(a, a) == 0.0);
}

TEST_CASE("translated point masses are exactly the shift") {
  CHECK(wasserstein_1d(sample_of({10, 10, 10}), sample_of({25, 25, 25})) ==
        doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("tiny supports match the transport oracle") {
  // W1({1,3},{2,4}) = 1 by shifting each atom one unit.
  CHECK(oracles::exact_wasserstein_1d({1, 3}, {2, 4}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(wasserstein_1d(sample_of({1, 3}), sample_of({2, 4})) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("equal-size samples are exact against the LP oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 16));
    const IntensitySample a = random_sample(rng, n);
    const IntensitySample b = random_sample(rng, n);
    const double exact = oracles::exact_wasserstein_1d(a.values, b.values);
    CHECK(wasserstein_1d(a, b) == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("unequal sizes stay within one intensity level of the oracle") {
  Rng rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 16));
    std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 16));
    if (m == n) m = n == 16 ? 15 : n + 1;
    const IntensitySample a = random_sample(rng, n);
    const IntensitySample b = random_sample(rng, m);
    const double exact = oracles::exact_wasserstein_1d(a.values, b.values);
    CHECK(std::abs(wasserstein_1d(a, b) - exact) <= 1.0);
  }
}

TEST_CASE("symmetry") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const IntensitySample a =
        random_sample(rng, static_cast<std::size_t>(rng.uniform_int(1, 40)));
    const IntensitySample b =
        random_sample(rng, static_cast<std::size_t>(rng.uniform_int(1, 40)));
    CHECK(wasserstein_1d(a, b) == wasserstein_1d(b, a));
  }
}

TEST_CASE("triangle inequality on random triples") {
  Rng rng(102);
  // Same-size triples take the exact path; all-distinct sizes share the
  // quantile grid. Both estimators are L1 metrics on their quantile
  // vectors, so the inequality holds to float tolerance.
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 24));
    const IntensitySample a = random_sample(rng, n);
    const IntensitySample b = random_sample(rng, n);
    const IntensitySample c = random_sample(rng, n);
    CHECK(wasserstein_1d(a, c) <=
          wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const IntensitySample a = random_sample(rng, 5);
    const IntensitySample b = random_sample(rng, 9);
    const IntensitySample c = random_sample(rng, 13);
    CHECK(wasserstein_1d(a, c) <=
          wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9);
  }
}

TEST_CASE("translation properties") {
  Rng rng(103);
  const IntensitySample a = random_sample(rng, 12);
  const IntensitySample b = random_sample(rng, 12);
  const double base = wasserstein_1d(a, b);

  IntensitySample a_shift = a, b_shift = b;
  for (double& v : a_shift.values) v += 17.0;
  for (double& v : b_shift.values) v += 17.0;
  CHECK(wasserstein_1d(a_shift, b_shift) ==
        doctest::Approx(base).epsilon(1e-12));

  // Shifting one sample by c moves the distance by at most |c| ...
  CHECK(std::abs(wasserstein_1d(a_shift, b) - base) <= 17.0 + 1e-9);

  // ... and by exactly |c| for equal-shape distributions.
  IntensitySample a_again = a;
  for (double& v : a_again.values) v += 17.0;
  CHECK(wasserstein_1d(a_again, a) == doctest::Approx(17.0).epsilon(1e-12));
}

TEST_CASE("empty samples are rejected") {
  CHECK_THROWS_AS(wasserstein_1d(IntensitySample{}, sample_of({1})), DataError);
}

TEST_CASE("dice and jaccard basics") {
  const Extents dims{10, 10};
  const BinaryMask a = mask_from(dims, {0, 1, 2, 3});
  const BinaryMask disjoint = mask_from(dims, {50, 51});
  CHECK(dice(a, a) == 1.0);
  CHECK(jaccard(a, a) == 1.0);
  CHECK(dice(a, disjoint) == 0.0);
  CHECK(jaccard(a, disjoint) == 0.0);

  const BinaryMask empty(dims);
  CHECK(dice(empty, empty) == 1.0);
  CHECK(jaccard(empty, empty) == 1.0);
}

TEST_CASE("|A|=|B|=100 with overlap 50 gives DICE 0.5 and JAC 1/3") {
  BinaryMask a(Extents{20, 20});
  BinaryMask b(Extents{20, 20});
  for (int i = 0; i < 100; ++i) a.bits[static_cast<std::size_t>(i)] = 1;
  for (int i = 50; i < 150; ++i) b.bits[static_cast<std::size_t>(i)] = 1;
  CHECK(dice(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(jaccard(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("dice equals 2*jac/(1+jac) and dominates jaccard") {
  Rng rng(104);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryMask a(Extents{12, 12});
    BinaryMask b(Extents{12, 12});
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
      a.bits[i] = rng.bernoulli(0.3) ? 1 : 0;
      b.bits[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    const double d = dice(a, b);
    const double j = jaccard(a, b);
    CHECK(d == doctest::Approx(2.0 * j / (1.0 + j)).epsilon(1e-12));
    CHECK(d >= j);
  }
}

TEST_CASE("surface distances of identical masks are zero") {
  const BinaryMask a = mask_from(Extents{8, 8}, {9, 10, 17, 18});
  const SurfaceDistances sd = surface_distances(a, a);
  CHECK(sd.hausdorff == 0.0);
  CHECK(sd.asd == 0.0);
}

TEST_CASE("two single pixels at (0,0) and (3,4) are 5 apart") {
  const BinaryMask a = mask_from(Extents{8, 8}, {0});
  const BinaryMask b = mask_from(Extents{8, 8}, {3 * 8 + 4});
  const SurfaceDistances sd = surface_distances(a, b);
  CHECK(sd.hausdorff == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(sd.asd == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("random masks match the brute-force oracle") {
  Rng rng(105);
  for (int trial = 0; trial < 30; ++trial) {
    BinaryMask a(Extents{10, 11});
    BinaryMask b(Extents{10, 11});
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
      a.bits[i] = rng.bernoulli(0.25) ? 1 : 0;
      b.bits[i] = rng.bernoulli(0.25) ? 1 : 0;
    }
    if (a.count() == 0 || b.count() == 0) continue;
    const SurfaceDistances sd = surface_distances(a, b);
    const oracles::BruteSurface ref = oracles::brute_surface(a, b);
    CHECK(sd.hausdorff == doctest::Approx(ref.hausdorff).epsilon(1e-12));
    CHECK(sd.asd == doctest::Approx(ref.asd).epsilon(1e-12));
    CHECK(sd.hausdorff >= sd.asd);
    CHECK(sd.asd >= 0.0);
  }
}

TEST_CASE("3-D surface distances against the oracle") {
  Rng rng(106);
  BinaryMask a(Extents{6, 6, 6});
  BinaryMask b(Extents{6, 6, 6});
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    a.bits[i] = rng.bernoulli(0.2) ? 1 : 0;
    b.bits[i] = rng.bernoulli(0.2) ? 1 : 0;
  }
  REQUIRE(a.count() > 0);
  REQUIRE(b.count() > 0);
  const SurfaceDistances sd = surface_distances(a, b);
  const oracles::BruteSurface ref = oracles::brute_surface(a, b);
  CHECK(sd.hausdorff == doctest::Approx(ref.hausdorff).epsilon(1e-12));
  CHECK(sd.asd == doctest::Approx(ref.asd).epsilon(1e-12));
}

TEST_CASE("empty masks make surface metrics undefined") {
  const BinaryMask a = mask_from(Extents{4, 4}, {5});
  const BinaryMask empty(Extents{4, 4});
  CHECK_THROWS_AS(surface_distances(a, empty), DataError);
  CHECK_THROWS_AS(surface_distances(empty, a), DataError);
}

TEST_CASE("dim mismatch is rejected") {
  const BinaryMask a = mask_from(Extents{4, 4}, {1});
  const BinaryMask b = mask_from(Extents{4, 5}, {1});
  CHECK_THROWS_AS(dice(a, b), DataError);
  CHECK_THROWS_AS(surface_distances(a, b), DataError);
}
