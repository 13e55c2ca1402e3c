#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <tuple>

#include "augat/cropshift.hpp"
#include "augat/transforms.hpp"
#include "oracles.hpp"

using namespace augat;

namespace {

using Key = std::tuple<int, int, int, int>;

std::map<Key, int> enumerate_compositions(int n) {
  std::map<Key, int> index;
  for (int l = 0; l <= n; ++l)
    for (int r = 0; r <= n; ++r)
      for (int t = 0; t <= n; ++t)
        for (int b = 0; b <= n; ++b)
          if (l + r + t + b == n) index.emplace(Key{l, r, t, b}, static_cast<int>(index.size()));
  return index;
}

/// Output pixel (y, x) of a Cropshift either comes from source
/// (y - shiftY + t, x - shiftX + l) or is fill.
void check_conserved(const Image& src, const Image& out, const CropshiftParams& p, float fill) {
  const int h = src.height() - p.removed.top - p.removed.bottom;
  const int w = src.width() - p.removed.left - p.removed.right;
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const bool inside = y >= p.shiftY && y < p.shiftY + h && x >= p.shiftX && x < p.shiftX + w;
      for (int c = 0; c < src.channels(); ++c) {
        const float expected =
            inside ? src.at(y - p.shiftY + p.removed.top, x - p.shiftX + p.removed.left, c) : fill;
        REQUIRE(out.at(y, x, c) == expected);
      }
    }
}

}  // namespace

TEST_CASE("composition counts follow stars and bars") {
  CHECK(enumerate_compositions(0).size() == 1);
  CHECK(enumerate_compositions(1).size() == 4);
  CHECK(enumerate_compositions(4).size() == 35);
  CHECK(enumerate_compositions(8).size() == 165);
}

TEST_CASE("N=0 has one composition") {
  RngStream rng(1, 0);
  for (int i = 0; i < 10; ++i) CHECK(sample_composition(0, rng) == Composition{});
  CHECK_THROWS_AS(sample_composition(-1, rng), std::invalid_argument);
}

TEST_CASE("N=1 picks each border with probability 1/4") {
  RngStream rng(1, 1);
  const auto index = enumerate_compositions(1);
  std::vector<long> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Composition c = sample_composition(1, rng);
    counts[static_cast<std::size_t>(index.at(Key{c.left, c.right, c.top, c.bottom}))]++;
  }
  for (long k : counts) CHECK(std::abs(static_cast<double>(k) / n - 0.25) < 0.01);
  CHECK(oracle::chi_square_p(counts) > 0.001);
}

TEST_CASE("N=4 is uniform over the 35 compositions") {
  RngStream rng(1, 4);
  const auto index = enumerate_compositions(4);
  std::vector<long> counts(index.size(), 0);
  for (int i = 0; i < 100000; ++i) {
    const Composition c = sample_composition(4, rng);
    REQUIRE(c.total() == 4);
    counts[static_cast<std::size_t>(index.at(Key{c.left, c.right, c.top, c.bottom}))]++;
  }
  for (long k : counts) CHECK(k > 0);
  CHECK(oracle::chi_square_p(counts) > 0.001);
}

TEST_CASE("placement is uniform over the valid shifts") {
  RngStream rng(2, 0);
  CropshiftParams p;
  p.lines = 3;
  p.removed = {2, 1, 0, 0};
  // Fix the composition by rejection, then histogram the shift.
  std::vector<long> counts(4, 0);
  int kept = 0;
  while (kept < 40000) {
    const CropshiftParams s = sample_cropshift(16, 16, 3, rng);
    if (!(s.removed == p.removed)) continue;
    REQUIRE(s.shiftY == 0);
    counts[static_cast<std::size_t>(s.shiftX)]++;
    ++kept;
  }
  CHECK(oracle::chi_square_p(counts) > 0.001);
}

TEST_CASE("N=0 is the identity") {
  RngStream rng(3, 0);
  const Image img = oracle::random_image(10, 12, 3, rng);
  const Fill fill = uniform_fill(3, 0.5f);
  CHECK(bit_equal(cropshift(img, 0, rng, fill), img));
  CHECK(bit_equal(cropshift_fixed(img, CropshiftParams{}, fill), img));
}

TEST_CASE("N=8 on 32x32 keeps (32-l-r)(32-t-b) source pixels") {
  RngStream rng(3, 1);
  const Image img = oracle::random_image(32, 32, 3, rng);
  for (int i = 0; i < 50; ++i) {
    const CropshiftParams p = sample_cropshift(32, 32, 8, rng);
    CHECK(p.removed.total() == 8);
    const Image out = cropshift_fixed(img, p, uniform_fill(3, 2.0f));
    long kept = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) kept += out.at(y, x, 0) != 2.0f;
    CHECK(kept == (32 - p.removed.left - p.removed.right) * (32 - p.removed.top - p.removed.bottom));
  }
}

TEST_CASE("left crop of 8 shifted flush right") {
  RngStream rng(3, 2);
  const Image img = oracle::random_image(32, 32, 1, rng);
  CropshiftParams p;
  p.lines = 8;
  p.removed = {8, 0, 0, 0};
  p.shiftX = 8;
  const Image out = cropshift_fixed(img, p, uniform_fill(1, 0.0f));
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) CHECK(out.at(y, x, 0) == (x < 8 ? 0.0f : img.at(y, x, 0)));
}

TEST_CASE("symmetric crop restored to the center equals a border frame cutout") {
  RngStream rng(3, 3);
  const Image img = oracle::random_image(32, 32, 3, rng);
  const Fill fill = uniform_fill(3, 0.25f);
  CropshiftParams p;
  p.lines = 8;
  p.removed = {2, 2, 2, 2};
  p.shiftX = 2;
  p.shiftY = 2;
  Image frame = img;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (y < 2 || y >= 30 || x < 2 || x >= 30)
        for (int c = 0; c < 3; ++c) frame.at(y, x, c) = 0.25f;
  const Image out = cropshift_fixed(img, p, fill);
  CHECK(bit_equal(out, frame));
  CHECK(bit_equal(cropshift_fixed(img, p, fill), out));
}

TEST_CASE("every non-fill pixel equals its mapped source pixel") {
  RngStream rng(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const int h = static_cast<int>(rng.uniform_int(9, 20)), w = static_cast<int>(rng.uniform_int(9, 20));
    const int n = static_cast<int>(rng.uniform_int(0, 8));
    const Image img = oracle::random_image(h, w, i % 2 ? 3 : 1, rng);
    const CropshiftParams p = sample_cropshift(h, w, n, rng);
    check_conserved(img, cropshift_fixed(img, p, uniform_fill(img.channels(), -1.0f)), p, -1.0f);
  }
}

TEST_CASE("invalid parameters are rejected") {
  RngStream rng(5, 0);
  const Image img(8, 8, 1);
  CHECK_THROWS_AS(cropshift(img, 8, rng, uniform_fill(1)), std::invalid_argument);
  CropshiftParams p;
  p.lines = 2;
  p.removed = {1, 0, 0, 0};
  CHECK_THROWS_AS(validate(p, 8, 8), std::invalid_argument);
  p.removed = {1, 1, 0, 0};
  p.shiftX = 3;
  CHECK_THROWS_AS(validate(p, 8, 8), std::invalid_argument);
  p.shiftX = 2;
  CHECK_NOTHROW(validate(p, 8, 8));
}
