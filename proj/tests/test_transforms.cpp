#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "augat/calibration.hpp"
#include "augat/transforms.hpp"
#include "oracles.hpp"

using namespace augat;

namespace {

TransformSpec spec_of(TransformKind kind, double strength) {
  TransformSpec s;
  s.kind = kind;
  s.strength = strength;
  return s;
}

}  // namespace

TEST_CASE("horizontal flip is an involution") {
  RngStream rng(1, 0);
  const Image img = oracle::random_image(5, 7, 3, rng);
  const Image once = horizontal_flip(img);
  CHECK_FALSE(bit_equal(once, img));
  CHECK(bit_equal(horizontal_flip(once), img));
  CHECK(once.at(2, 0, 1) == img.at(2, 6, 1));
}

TEST_CASE("zero-strength geometry and threshold 1 solarize are identities") {
  RngStream rng(2, 0);
  const Image img = oracle::random_image(8, 8, 3, rng);
  const Fill fill = uniform_fill(3);
  CHECK(bit_equal(rotate(img, 0.0, Interp::Nearest, fill), img));
  CHECK(bit_equal(rotate(img, 0.0, Interp::Bilinear, fill), img));
  CHECK(bit_equal(shear_x(img, 0.0, Interp::Nearest, fill), img));
  CHECK(bit_equal(translate_y(img, 0.0, Interp::Nearest, fill), img));
  CHECK(bit_equal(solarize(img, 1.0), img));
}

TEST_CASE("solarize inverts values above the threshold only") {
  Image img(1, 3, 1, std::vector<float>{0.2f, 0.5f, 0.9f});
  const Image out = solarize(img, 0.5);
  CHECK(out.at(0, 0, 0) == 0.2f);
  CHECK(out.at(0, 1, 0) == 0.5f);
  CHECK(out.at(0, 2, 0) == doctest::Approx(0.1f));
}

TEST_CASE("brightness scales every pixel") {
  RngStream rng(3, 0);
  for (double f : {0.5, 0.8, 1.0, 1.6}) {
    const Image img = oracle::random_image(6, 5, 3, rng);
    const Image out = brightness(img, f);
    for (std::size_t i = 0; i < img.size(); ++i) {
      const float expected = std::clamp(static_cast<float>(f) * img.data()[i], 0.0f, 1.0f);
      CHECK(out.data()[i] == expected);
    }
  }
}

TEST_CASE("enhancement factor 1 is the identity") {
  RngStream rng(3, 1);
  const Image img = oracle::random_image(6, 6, 3, rng);
  CHECK(bit_equal(color(img, 1.0), img));
  CHECK(bit_equal(contrast(img, 1.0), img));
  CHECK(bit_equal(brightness(img, 1.0), img));
  CHECK(bit_equal(sharpness(img, 1.0), img));
}

TEST_CASE("color factor 0 yields gray pixels") {
  RngStream rng(3, 2);
  const Image out = color(oracle::random_image(4, 4, 3, rng), 0.0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      CHECK(out.at(y, x, 0) == out.at(y, x, 1));
      CHECK(out.at(y, x, 1) == out.at(y, x, 2));
    }
}

TEST_CASE("equalize and autocontrast match the naive references") {
  RngStream rng(4, 0);
  for (int i = 0; i < 30; ++i) {
    const Image img = i % 2 ? oracle::random_image(12, 10, 3, rng) : oracle::random_image_8bit(9, 11, 1, rng);
    CHECK(bit_equal(equalize(img), oracle::naive_equalize(img)));
    CHECK(bit_equal(autocontrast(img), oracle::naive_autocontrast(img)));
  }
}

TEST_CASE("histogram ops leave constant channels alone") {
  const Image flat(4, 4, 3, 0.3f);
  CHECK(bit_equal(equalize(flat), flat));
  CHECK(bit_equal(autocontrast(flat), flat));
}

TEST_CASE("cutout of the full side fills everything") {
  RngStream rng(5, 0);
  const Image img = oracle::random_image(6, 6, 3, rng);
  const Fill fill{0.1f, 0.2f, 0.3f};
  const Image out = cutout(img, 6, CutoutVariant::InsideOnly, rng, fill);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == fill[static_cast<std::size_t>(c)]);
  CHECK_THROWS_AS(cutout(img, 7, CutoutVariant::InsideOnly, rng, fill), std::invalid_argument);
}

TEST_CASE("inside-only cutout corner is uniform over 25x25 positions") {
  RngStream rng(5, 1);
  std::vector<long> counts(25 * 25, 0);
  for (int i = 0; i < 100000; ++i) {
    const Box b = sample_cutout_box(32, 32, 8, CutoutVariant::InsideOnly, rng);
    REQUIRE(b.top >= 0);
    REQUIRE(b.top <= 24);
    REQUIRE(b.left >= 0);
    REQUIRE(b.left <= 24);
    counts[static_cast<std::size_t>(b.top * 25 + b.left)]++;
  }
  CHECK(oracle::chi_square_p(counts) > 0.001);
}

TEST_CASE("padcrop") {
  RngStream rng(6, 0);
  const Image img = oracle::random_image(32, 32, 3, rng);
  const Fill fill = uniform_fill(3, 0.5f);
  CHECK(bit_equal(padcrop(img, 0, rng, fill), img));
  CHECK(bit_equal(padcrop_at(img, 4, 4, 4, fill), img));
  const Image shifted = padcrop_at(img, 4, 0, 0, fill);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) {
        const float expected = (y < 4 || x < 4) ? 0.5f : img.at(y - 4, x - 4, c);
        CHECK(shifted.at(y, x, c) == expected);
      }
}

TEST_CASE("random erasing respects the area range and image bounds") {
  RngStream rng(7, 0);
  const RangeD area{0.02, 0.33}, aspect{0.3, 3.3};
  int sampled = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto box = sample_erase_box(32, 32, area, aspect, rng);
    if (!box) continue;
    ++sampled;
    REQUIRE(box->top >= 0);
    REQUIRE(box->left >= 0);
    REQUIRE(box->top + box->height <= 32);
    REQUIRE(box->left + box->width <= 32);
    const double erased = static_cast<double>(box->height) * box->width;
    REQUIRE(erased >= 0.02 * 1024);
    REQUIRE(erased <= 0.33 * 1024);
  }
  CHECK(sampled > 9000);
}

TEST_CASE("degenerate erase range gives a square patch") {
  RngStream rng(7, 1);
  for (double x : {0.0625, 0.1, 0.25}) {
    const auto box = sample_erase_box(32, 32, {x, x}, {1, 1}, rng);
    REQUIRE(box.has_value());
    const int side = static_cast<int>(std::lround(std::sqrt(x * 1024)));
    CHECK(box->height == side);
    CHECK(box->width == side);
  }
  CHECK_THROWS_AS(sample_erase_box(32, 32, {0.3, 0.2}, {1, 1}, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_erase_box(32, 32, {0.0, 0.2}, {1, 1}, rng), std::invalid_argument);
}

TEST_CASE("constant erase fills exactly the box") {
  RngStream rng(7, 2);
  const Image img = oracle::random_image(10, 10, 1, rng);
  const Fill fill{0.75f};
  const Image out = erase_box(img, Box{2, 3, 4, 5}, EraseFill::Constant, fill, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      const bool inside = y >= 2 && y < 6 && x >= 3 && x < 8;
      CHECK(out.at(y, x, 0) == (inside ? 0.75f : img.at(y, x, 0)));
    }
}

TEST_CASE("strength validation") {
  CHECK_THROWS_AS(validate(spec_of(TransformKind::Brightness, 0.4)), std::invalid_argument);
  CHECK_THROWS_AS(validate(spec_of(TransformKind::Solarize, 1.5)), std::invalid_argument);
  CHECK_THROWS_AS(validate(spec_of(TransformKind::Cutout, 2.5)), std::invalid_argument);
  CHECK_THROWS_AS(validate(spec_of(TransformKind::RandomErasing, 0.0)), std::invalid_argument);
  CHECK_NOTHROW(validate(spec_of(TransformKind::Brightness, 0.5)));
  CHECK_THROWS_AS(parse_transform_kind("Blur"), std::invalid_argument);
  for (TransformKind k : all_transform_kinds()) CHECK(parse_transform_kind(to_string(k)) == k);
}

TEST_CASE("every transform keeps shape and unit range") {
  RngStream rng(8, 0);
  const Image img = oracle::random_image(12, 12, 3, rng);
  for (TransformKind k : all_transform_kinds()) {
    TransformSpec s;
    s.kind = k;
    if (uses_strength(k)) {
      const auto [lo, hi] = strength_bounds(k);
      s.strength = std::isfinite(hi) ? (lo + hi) / 2 : 4.0;
      if (k == TransformKind::Cutout || k == TransformKind::Padcrop || k == TransformKind::Cropshift) s.strength = 4;
    }
    for (int i = 0; i < 5; ++i) {
      const Image out = apply_transform(s, img, rng);
      CHECK(out.same_shape(img));
      CHECK(out.in_unit_range());
    }
  }
}

TEST_CASE("fixed placement reuses one location") {
  RngStream rng(9, 0);
  TransformSpec s = spec_of(TransformKind::Cutout, 4);
  s.insideOnly = true;
  s.placement = Placement::Fixed;
  s = fix_placement(s, 16, 16, 3, rng);
  REQUIRE(s.fixed.has_value());
  const Image img = oracle::random_image(16, 16, 3, rng);
  const Image first = apply_transform(s, img, rng);
  for (int i = 0; i < 5; ++i) CHECK(bit_equal(apply_transform(s, img, rng), first));
}

TEST_CASE("calibration table lookups") {
  std::istringstream in("# comment\nShearX.1 = 0.1\nShearX.2 = 0.2 hardness=1.2\n");
  const CalibrationTable table = CalibrationTable::parse(in);
  const HardnessCalibration& cal = table.at(TransformKind::ShearX);
  CHECK(calibrated_spec(TransformKind::ShearX, 1, cal).strength == 0.1);
  CHECK(cal.find(1)->hardness == 1.04);
  CHECK(cal.find(2)->hardness == 1.2);
  CHECK_THROWS_AS(calibrated_spec(TransformKind::ShearX, 0, cal), std::out_of_range);
  CHECK_THROWS_AS(calibrated_spec(TransformKind::ShearX, 8, cal), std::out_of_range);
  CHECK_THROWS_AS(calibrated_spec(TransformKind::ShearX, 3, cal), std::out_of_range);
  CHECK_THROWS_AS(table.at(TransformKind::Rotate), std::out_of_range);

  std::ostringstream out;
  table.write(out);
  std::istringstream back(out.str());
  const CalibrationTable again = CalibrationTable::parse(back);
  CHECK(again.at(TransformKind::ShearX).find(2)->strength == 0.2);
}

TEST_CASE("the repository calibration file maps ShearX degree 1 to 0.1") {
  const CalibrationTable table = CalibrationTable::load("configs/calibration.txt");
  CHECK(calibrated_spec(TransformKind::ShearX, 1, table.at(TransformKind::ShearX)).strength == 0.1);
}

TEST_CASE("nominal hardness degrees from the reference targets") {
  const std::vector<double> targets(kReferenceTargetRobustness.begin(), kReferenceTargetRobustness.end());
  const auto degrees = nominal_hardness_degrees(kReferenceBaseRobustness, targets);
  REQUIRE(degrees.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(degrees[i] == doctest::Approx(kHardnessDegrees[i]).epsilon(1e-12));
}

TEST_CASE("strength search on a monotone response") {
  auto decreasing = [](double s) { return 0.5 - 0.4 * s; };
  const auto r = search_strength(decreasing, 0.0, 1.0, 0.3, 1e-4, 19);
  CHECK(r.reachable);
  CHECK(std::abs(r.achieved - 0.3) <= 1e-4);
  CHECK(r.iterations < 20);

  auto increasing = [](double s) { return 0.1 + 0.4 * s; };
  const auto up = search_strength(increasing, 0.0, 1.0, 0.3, 1e-4, 19);
  CHECK(up.reachable);
  CHECK(up.strength == doctest::Approx(0.5).epsilon(1e-3));

  const auto flat = search_strength([](double) { return 0.5; }, 0.0, 1.0, 0.3, 1e-3, 19);
  CHECK_FALSE(flat.reachable);

  auto stepwise = [](double s) { return 0.5 - 0.05 * s; };
  const auto whole = search_strength(stepwise, 0.0, 8.0, 0.3, 1e-6, 19, true);
  CHECK(whole.reachable);
  CHECK(whole.strength == 4.0);
}
