#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augat/cropshift.hpp"
#include "augat/image.hpp"
#include "augat/rng.hpp"

namespace augat {

enum class TransformKind {
  Identity,
  ShearX,
  ShearY,
  TranslateX,
  TranslateY,
  Rotate,
  Color,
  Sharpness,
  Brightness,
  Contrast,
  Solarize,
  Equalize,
  Autocontrast,
  HorizontalFlip,
  Padcrop,
  Cutout,
  Cropshift,
  RandomErasing,
};

std::string_view to_string(TransformKind kind);
/// Parses the names produced by to_string(). Throws std::invalid_argument.
TransformKind parse_transform_kind(std::string_view name);
const std::vector<TransformKind>& all_transform_kinds();

/// Legal strength interval of a kind. Units: Shear = tangent factor,
/// Rotate = degrees, Translate/Padcrop/Cutout/Cropshift = pixels or lines,
/// Color/Sharpness/Brightness/Contrast = enhancement factor (1 = identity),
/// Solarize = threshold, RandomErasing = erased area fraction.
struct StrengthBounds {
  double lo;
  double hi;
};
StrengthBounds strength_bounds(TransformKind kind);
bool uses_strength(TransformKind kind);
bool is_color_transform(TransformKind kind);

/// Random: every application samples its own sign/location.
/// Fixed: location (and sign) sampled once by fix_placement() and reused.
enum class Placement { Random, Fixed };

enum class EraseFill { Noise, Constant };

/// Fully resolved parameters of one application. Applying the same params
/// to the same image is deterministic.
struct TransformParams {
  TransformKind kind = TransformKind::Identity;
  /// Signed magnitude for geometric kinds, factor/threshold for color kinds.
  double value = 0.0;
  /// Region kinds: Cutout/RandomErasing box, Padcrop offset (top, left).
  int top = 0;
  int left = 0;
  int boxHeight = 0;
  int boxWidth = 0;
  CropshiftParams crop{};
  std::uint64_t noiseSeed = 0;
  EraseFill eraseFill = EraseFill::Noise;
  Interp interp = Interp::Nearest;
  Fill fill;

  bool operator==(const TransformParams&) const = default;
};

struct TransformSpec {
  TransformKind kind = TransformKind::Identity;
  double strength = 0.0;
  Placement placement = Placement::Random;
  /// Cutout only: keep the box entirely inside the image (Cutout-i).
  bool insideOnly = false;
  Interp interp = Interp::Nearest;
  /// Empty means black in every channel.
  Fill fill;
  EraseFill eraseFill = EraseFill::Noise;
  /// Cached parameters when placement == Fixed.
  std::optional<TransformParams> fixed;

  bool operator==(const TransformSpec&) const = default;
};

/// Throws std::invalid_argument when the strength is outside the kind's legal range.
void validate(const TransformSpec& spec);

/// Sample concrete parameters for an image of the given shape.
TransformParams sample_params(const TransformSpec& spec, int height, int width, int channels, RngStream& rng);
Image apply_params(const TransformParams& params, const Image& img);

/// Resolve the parameters once so later applications are deterministic
/// (the "-1" variants such as Cutout-i-1 and Cropshift-1).
TransformSpec fix_placement(TransformSpec spec, int height, int width, int channels, RngStream& rng);

/// Sample parameters (unless the spec is fixed) and apply. Output has the
/// input's shape and values in [0, 1].
Image apply_transform(const TransformSpec& spec, const Image& img, RngStream& rng);

// Individual operations.

Image horizontal_flip(const Image& img);
Image shear_x(const Image& img, double factor, Interp interp, std::span<const float> fill);
Image shear_y(const Image& img, double factor, Interp interp, std::span<const float> fill);
Image translate_x(const Image& img, double pixels, Interp interp, std::span<const float> fill);
Image translate_y(const Image& img, double pixels, Interp interp, std::span<const float> fill);
/// Counter-clockwise rotation about the image center.
Image rotate(const Image& img, double degrees, Interp interp, std::span<const float> fill);
Image color(const Image& img, double factor);
Image sharpness(const Image& img, double factor);
Image brightness(const Image& img, double factor);
Image contrast(const Image& img, double factor);
/// Inverts every value strictly above `threshold`.
Image solarize(const Image& img, double threshold);
Image equalize(const Image& img);
Image autocontrast(const Image& img);

/// Round to the nearest 8-bit level (the domain of the histogram operations).
int quantize8(float v) noexcept;

enum class CutoutVariant { Standard, InsideOnly };

struct Box {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

/// Standard samples the box center anywhere in the image, so the box may be
/// clipped by the border. InsideOnly samples the top-left corner uniformly
/// over the (H - size + 1) x (W - size + 1) positions that keep it inside.
Box sample_cutout_box(int height, int width, int size, CutoutVariant variant, RngStream& rng);
Image cutout(const Image& img, int size, CutoutVariant variant, RngStream& rng, std::span<const float> fill);
/// Sets the intersection of `box` with the image to `fill`.
Image fill_box(const Image& img, const Box& box, std::span<const float> fill);

Image padcrop(const Image& img, int pad, RngStream& rng, std::span<const float> fill);
/// Pads by `pad` on every edge and crops the H x W window at (offsetY, offsetX).
Image padcrop_at(const Image& img, int pad, int offsetY, int offsetX, std::span<const float> fill);

struct RangeD {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const RangeD&) const = default;
};

struct EraseOptions {
  EraseFill fill = EraseFill::Noise;
  Fill constant;
  int maxAttempts = 10;
};

/// Sample an erase rectangle: area fraction uniform in `area`, log-aspect
/// uniform in `aspect`. Returns nullopt when no attempt fits.
std::optional<Box> sample_erase_box(int height, int width, RangeD area, RangeD aspect, RngStream& rng,
                                    int maxAttempts = 10);
Image random_erase(const Image& img, RangeD area, RangeD aspect, RngStream& rng, const EraseOptions& options = {});
/// Erase a known rectangle; noise values are drawn from (noiseSeed, 0).
Image erase_box(const Image& img, const Box& box, EraseFill fill, std::span<const float> constant,
                std::uint64_t noiseSeed);

}  // namespace augat
