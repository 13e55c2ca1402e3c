#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "augat/image.hpp"
#include "augat/rng.hpp"
#include "augat/transforms.hpp"
#include "oracles.hpp"

using namespace augat;

TEST_CASE("rng streams are reproducible per key") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differsStream = false, differsSeed = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differsStream |= va != c.next_u64();
    differsSeed |= va != d.next_u64();
  }
  CHECK(differsStream);
  CHECK(differsSeed);
}

TEST_CASE("split ignores how much of the parent was consumed") {
  RngStream fresh(5, 1);
  RngStream used(5, 1);
  for (int i = 0; i < 13; ++i) used.next_u64();
  RngStream x = fresh.split(9), y = used.split(9), z = fresh.split(10);
  const auto vx = x.next_u64();
  CHECK(vx == y.next_u64());
  CHECK(vx != z.next_u64());
}

TEST_CASE("uniform_int degenerate and invalid ranges") {
  RngStream rng(1, 0);
  CHECK(rng.uniform_int(5, 5) == 5);
  CHECK(rng.uniform_int(0, 0) == 0);
  CHECK_THROWS_AS(rng.uniform_int(3, 2), std::invalid_argument);
}

TEST_CASE("uniform_int over [0,3] is uniform") {
  RngStream rng(2024, 3);
  std::vector<long> counts(4, 0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(rng.uniform_int(0, 3))]++;
  for (long c : counts) CHECK(std::abs(static_cast<double>(c) / n - 0.25) <= 0.005);
  CHECK(oracle::chi_square_p(counts) > 0.001);
}

TEST_CASE("uniform01 stays in [0,1) and normal has unit variance") {
  RngStream rng(3, 3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("resample with the identity map is a bit-exact copy") {
  RngStream rng(4, 0);
  const Image img = oracle::random_image(9, 7, 3, rng);
  const Fill fill = uniform_fill(3, 0.5f);
  CHECK(bit_equal(resample(img, kIdentityMap, Interp::Nearest, fill), img));
  CHECK(bit_equal(resample(img, kIdentityMap, Interp::Bilinear, fill), img));
}

TEST_CASE("translating by the full width leaves only fill") {
  RngStream rng(4, 1);
  const Image img = oracle::random_image(6, 6, 3, rng);
  const Fill fill{0.25f, 0.5f, 0.75f};
  const AffineMap shift{1, 0, -6, 0, 1, 0};
  for (Interp m : {Interp::Nearest, Interp::Bilinear}) {
    const Image out = resample(img, shift, m, fill);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x)
        for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == fill[static_cast<std::size_t>(c)]);
  }
}

TEST_CASE("nearest 90 degree rotation of a 3x3 image permutes its pixels") {
  Image img(3, 3, 1);
  for (int i = 0; i < 9; ++i) img.data()[static_cast<std::size_t>(i)] = static_cast<float>(i) / 8.0f;
  const Image out = rotate(img, 90.0, Interp::Nearest, uniform_fill(1));
  // Counter-clockwise: output (y, x) reads source (x, 2 - y).
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) CHECK(out.at(y, x, 0) == img.at(x, 2 - y, 0));
  std::multiset<float> a(img.values().begin(), img.values().end()), b(out.values().begin(), out.values().end());
  CHECK(a == b);
}

TEST_CASE("resample rejects non-finite maps and wrong fill length") {
  const Image img(4, 4, 3);
  AffineMap bad = kIdentityMap;
  bad[2] = std::nan("");
  CHECK_THROWS_AS(resample(img, bad, Interp::Nearest, uniform_fill(3)), std::invalid_argument);
  CHECK_THROWS_AS(resample(img, kIdentityMap, Interp::Nearest, uniform_fill(1)), std::invalid_argument);
}

TEST_CASE("clamp01") {
  Image img(1, 3, 1, std::vector<float>{0.5f, 1.2f, -0.3f});
  const Image out = clamp01(img);
  CHECK(out.at(0, 0, 0) == 0.5f);
  CHECK(out.at(0, 1, 0) == 1.0f);
  CHECK(out.at(0, 2, 0) == 0.0f);
  CHECK(out.in_unit_range());
  CHECK_FALSE(img.in_unit_range());
}

TEST_CASE("image and dataset shape checks") {
  CHECK_THROWS_AS(Image(2, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(Image(2, 2, 1, std::vector<float>(3)), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({Image(2, 2, 1)}, {2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({Image(2, 2, 1)}, {0, 1}, 2), std::invalid_argument);
}

TEST_CASE("bit_equal distinguishes signed zero") {
  Image a(1, 1, 1, std::vector<float>{0.0f});
  Image b(1, 1, 1, std::vector<float>{-0.0f});
  CHECK_FALSE(bit_equal(a, b));
  CHECK(bit_equal(a, a));
}
