#include "augat/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace augat {
namespace {

struct KindName {
  TransformKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 18> kKindNames{{
    {TransformKind::Identity, "Identity"},
    {TransformKind::ShearX, "ShearX"},
    {TransformKind::ShearY, "ShearY"},
    {TransformKind::TranslateX, "TranslateX"},
    {TransformKind::TranslateY, "TranslateY"},
    {TransformKind::Rotate, "Rotate"},
    {TransformKind::Color, "Color"},
    {TransformKind::Sharpness, "Sharpness"},
    {TransformKind::Brightness, "Brightness"},
    {TransformKind::Contrast, "Contrast"},
    {TransformKind::Solarize, "Solarize"},
    {TransformKind::Equalize, "Equalize"},
    {TransformKind::Autocontrast, "Autocontrast"},
    {TransformKind::HorizontalFlip, "HorizontalFlip"},
    {TransformKind::Padcrop, "Padcrop"},
    {TransformKind::Cutout, "Cutout"},
    {TransformKind::Cropshift, "Cropshift"},
    {TransformKind::RandomErasing, "RandomErasing"},
}};

constexpr double kInf = std::numeric_limits<double>::infinity();

bool integral_strength(TransformKind k) {
  return k == TransformKind::Padcrop || k == TransformKind::Cutout || k == TransformKind::Cropshift;
}

Fill resolve_fill(const Fill& fill, int channels) {
  if (fill.empty()) return uniform_fill(channels);
  if (fill.size() != static_cast<std::size_t>(channels))
    throw std::invalid_argument("fill length does not match image channels");
  return fill;
}

Image blend(const Image& degenerate, const Image& img, double factor) {
  const float f = static_cast<float>(factor);
  std::vector<float> out(img.size());
  const auto a = degenerate.data();
  const auto b = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp((1.0f - f) * a[i] + f * b[i], 0.0f, 1.0f);
  return Image(img.height(), img.width(), img.channels(), std::move(out));
}

float luma(const Image& img, int y, int x) {
  if (img.channels() == 1) return img.at(y, x, 0);
  return 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
}

using Histogram = std::array<long, 256>;

Histogram channel_histogram(const Image& img, int c) {
  Histogram h{};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) ++h[static_cast<std::size_t>(quantize8(img.at(y, x, c)))];
  return h;
}

// Applies a per-channel 8-bit lookup table; channels without a table keep
// their original values.
Image apply_luts(const Image& img, const std::vector<std::optional<std::array<int, 256>>>& luts) {
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const auto& lut = luts[static_cast<std::size_t>(c)];
        if (lut) out.at(y, x, c) = static_cast<float>((*lut)[static_cast<std::size_t>(quantize8(img.at(y, x, c)))]) / 255.0f;
      }
  return out;
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "Unknown";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  throw std::invalid_argument("unknown transform kind '" + std::string(name) + "'");
}

const std::vector<TransformKind>& all_transform_kinds() {
  static const std::vector<TransformKind> kinds = [] {
    std::vector<TransformKind> v;
    for (const auto& kn : kKindNames) v.push_back(kn.kind);
    return v;
  }();
  return kinds;
}

StrengthBounds strength_bounds(TransformKind kind) {
  switch (kind) {
    case TransformKind::ShearX:
    case TransformKind::ShearY:
      return {0.0, 1.0};
    case TransformKind::Rotate:
      return {0.0, 180.0};
    case TransformKind::Color:
    case TransformKind::Sharpness:
      return {0.0, 2.0};
    case TransformKind::Brightness:
    case TransformKind::Contrast:
      return {0.5, 2.0};
    case TransformKind::Solarize:
      return {0.0, 1.0};
    case TransformKind::RandomErasing:
      return {0.0, 1.0};
    case TransformKind::TranslateX:
    case TransformKind::TranslateY:
    case TransformKind::Padcrop:
    case TransformKind::Cutout:
    case TransformKind::Cropshift:
      return {0.0, kInf};
    default:
      return {-kInf, kInf};
  }
}

bool uses_strength(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity:
    case TransformKind::Equalize:
    case TransformKind::Autocontrast:
    case TransformKind::HorizontalFlip:
      return false;
    default:
      return true;
  }
}

bool is_color_transform(TransformKind kind) {
  switch (kind) {
    case TransformKind::Color:
    case TransformKind::Sharpness:
    case TransformKind::Brightness:
    case TransformKind::Contrast:
    case TransformKind::Solarize:
    case TransformKind::Equalize:
    case TransformKind::Autocontrast:
      return true;
    default:
      return false;
  }
}

void validate(const TransformSpec& spec) {
  if (!uses_strength(spec.kind)) return;
  const auto [lo, hi] = strength_bounds(spec.kind);
  const double s = spec.strength;
  if (!std::isfinite(s) || s < lo || s > hi)
    throw std::invalid_argument(std::string(to_string(spec.kind)) + ": strength " + std::to_string(s) +
                                " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (spec.kind == TransformKind::RandomErasing && s <= 0.0)
    throw std::invalid_argument("RandomErasing: strength must be positive");
  if (integral_strength(spec.kind) && s != std::floor(s))
    throw std::invalid_argument(std::string(to_string(spec.kind)) + ": strength must be an integer");
}

// ---- geometric ---------------------------------------------------------

Image horizontal_flip(const Image& img) {
  Image out(img.height(), img.width(), img.channels());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(y, w - 1 - x, c);
  return out;
}

Image shear_x(const Image& img, double factor, Interp interp, std::span<const float> fill) {
  if (factor == 0.0) return img;
  const double cy = img.height() / 2.0;
  return resample(img, {1, factor, -factor * cy, 0, 1, 0}, interp, fill);
}

Image shear_y(const Image& img, double factor, Interp interp, std::span<const float> fill) {
  if (factor == 0.0) return img;
  const double cx = img.width() / 2.0;
  return resample(img, {1, 0, 0, factor, 1, -factor * cx}, interp, fill);
}

Image translate_x(const Image& img, double pixels, Interp interp, std::span<const float> fill) {
  if (pixels == 0.0) return img;
  return resample(img, {1, 0, -pixels, 0, 1, 0}, interp, fill);
}

Image translate_y(const Image& img, double pixels, Interp interp, std::span<const float> fill) {
  if (pixels == 0.0) return img;
  return resample(img, {1, 0, 0, 0, 1, -pixels}, interp, fill);
}

Image rotate(const Image& img, double degrees, Interp interp, std::span<const float> fill) {
  if (degrees == 0.0) return img;
  const double a = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(a), sn = std::sin(a);
  const double cx = img.width() / 2.0, cy = img.height() / 2.0;
  return resample(img, {cs, -sn, cx - cs * cx + sn * cy, sn, cs, cy - sn * cx - cs * cy}, interp, fill);
}

// ---- photometric ---------------------------------------------------------

Image color(const Image& img, double factor) {
  if (img.channels() == 1) return img;
  Image gray(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const float l = luma(img, y, x);
      for (int c = 0; c < img.channels(); ++c) gray.at(y, x, c) = l;
    }
  return blend(gray, img, factor);
}

Image sharpness(const Image& img, double factor) {
  // 3x3 smoothing kernel [1 1 1; 1 5 1; 1 1 1] / 13 on the interior; the
  // one-pixel border keeps its original values.
  Image smooth = img;
  for (int y = 1; y + 1 < img.height(); ++y)
    for (int x = 1; x + 1 < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        float acc = 0.0f;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) acc += img.at(y + dy, x + dx, c) * ((dy == 0 && dx == 0) ? 5.0f : 1.0f);
        smooth.at(y, x, c) = acc / 13.0f;
      }
  return blend(smooth, img, factor);
}

Image brightness(const Image& img, double factor) {
  return blend(Image(img.height(), img.width(), img.channels(), 0.0f), img, factor);
}

Image contrast(const Image& img, double factor) {
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) sum += luma(img, y, x);
  const double pixels = static_cast<double>(img.height()) * img.width();
  const float mean = pixels > 0 ? static_cast<float>(sum / pixels) : 0.0f;
  return blend(Image(img.height(), img.width(), img.channels(), mean), img, factor);
}

Image solarize(const Image& img, double threshold) {
  std::vector<float> out(img.values());
  for (float& v : out)
    if (v > threshold) v = 1.0f - v;
  return Image(img.height(), img.width(), img.channels(), std::move(out));
}

int quantize8(float v) noexcept {
  const long q = std::lround(v * 255.0f);
  return static_cast<int>(std::clamp(q, 0L, 255L));
}

Image equalize(const Image& img) {
  std::vector<std::optional<std::array<int, 256>>> luts(static_cast<std::size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c) {
    const Histogram h = channel_histogram(img, c);
    long total = 0, last = 0, nonzero = 0;
    for (long count : h)
      if (count) {
        total += count;
        last = count;
        ++nonzero;
      }
    if (nonzero <= 1) continue;
    const long step = (total - last) / 255;
    if (step == 0) continue;
    std::array<int, 256> lut{};
    long n = step / 2;
    for (std::size_t i = 0; i < 256; ++i) {
      lut[i] = static_cast<int>(std::min(n / step, 255L));
      n += h[i];
    }
    luts[static_cast<std::size_t>(c)] = lut;
  }
  return apply_luts(img, luts);
}

Image autocontrast(const Image& img) {
  std::vector<std::optional<std::array<int, 256>>> luts(static_cast<std::size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c) {
    const Histogram h = channel_histogram(img, c);
    int lo = 0, hi = 255;
    while (lo < 256 && h[static_cast<std::size_t>(lo)] == 0) ++lo;
    while (hi >= 0 && h[static_cast<std::size_t>(hi)] == 0) --hi;
    if (hi <= lo) continue;
    const double scale = 255.0 / (hi - lo);
    const double offset = -lo * scale;
    std::array<int, 256> lut{};
    for (int i = 0; i < 256; ++i)
      lut[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>(i * scale + offset), 0, 255);
    luts[static_cast<std::size_t>(c)] = lut;
  }
  return apply_luts(img, luts);
}

// ---- region -------------------------------------------------------------

Box sample_cutout_box(int height, int width, int size, CutoutVariant variant, RngStream& rng) {
  if (size < 0 || size > std::min(height, width))
    throw std::invalid_argument("cutout: size " + std::to_string(size) + " outside [0, min(H, W)]");
  if (variant == CutoutVariant::InsideOnly) {
    const int top = static_cast<int>(rng.uniform_int(0, height - size));
    const int left = static_cast<int>(rng.uniform_int(0, width - size));
    return {top, left, size, size};
  }
  const int cy = static_cast<int>(rng.uniform_int(0, height - 1));
  const int cx = static_cast<int>(rng.uniform_int(0, width - 1));
  return {cy - size / 2, cx - size / 2, size, size};
}

Image fill_box(const Image& img, const Box& box, std::span<const float> fill) {
  if (fill.size() != static_cast<std::size_t>(img.channels())) throw std::invalid_argument("fill length != channels");
  Image out = img;
  const int y0 = std::max(box.top, 0), y1 = std::min(box.top + box.height, img.height());
  const int x0 = std::max(box.left, 0), x1 = std::min(box.left + box.width, img.width());
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = fill[static_cast<std::size_t>(c)];
  return out;
}

Image cutout(const Image& img, int size, CutoutVariant variant, RngStream& rng, std::span<const float> fill) {
  const Box box = sample_cutout_box(img.height(), img.width(), size, variant, rng);
  return fill_box(img, box, fill);
}

Image padcrop_at(const Image& img, int pad, int offsetY, int offsetX, std::span<const float> fill) {
  if (pad < 0) throw std::invalid_argument("padcrop: negative padding");
  if (offsetY < 0 || offsetX < 0 || offsetY > 2 * pad || offsetX > 2 * pad)
    throw std::invalid_argument("padcrop: offset outside [0, 2 * pad]");
  if (fill.size() != static_cast<std::size_t>(img.channels())) throw std::invalid_argument("fill length != channels");
  Image out(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const int sy = y + offsetY - pad, sx = x + offsetX - pad;
      const bool inside = sy >= 0 && sx >= 0 && sy < img.height() && sx < img.width();
      for (int c = 0; c < img.channels(); ++c)
        out.at(y, x, c) = inside ? img.at(sy, sx, c) : fill[static_cast<std::size_t>(c)];
    }
  return out;
}

Image padcrop(const Image& img, int pad, RngStream& rng, std::span<const float> fill) {
  if (pad < 0) throw std::invalid_argument("padcrop: negative padding");
  const int oy = static_cast<int>(rng.uniform_int(0, 2 * pad));
  const int ox = static_cast<int>(rng.uniform_int(0, 2 * pad));
  return padcrop_at(img, pad, oy, ox, fill);
}

std::optional<Box> sample_erase_box(int height, int width, RangeD area, RangeD aspect, RngStream& rng,
                                    int maxAttempts) {
  if (!(area.lo > 0.0 && area.lo <= area.hi && area.hi <= 1.0))
    throw std::invalid_argument("random_erase: area range must satisfy 0 < lo <= hi <= 1");
  if (!(aspect.lo > 0.0 && aspect.lo <= aspect.hi)) throw std::invalid_argument("random_erase: bad aspect range");
  const double pixels = static_cast<double>(height) * width;
  // A range narrower than one pixel cannot be met exactly by an integer box;
  // accept the rounded box in that case.
  const bool strictArea = (area.hi - area.lo) * pixels >= 1.0;
  const double logLo = std::log(aspect.lo), logHi = std::log(aspect.hi);
  for (int attempt = 0; attempt < maxAttempts; ++attempt) {
    const double target = rng.uniform_real(area.lo, area.hi) * pixels;
    const double ratio = std::exp(rng.uniform_real(logLo, logHi));
    const int h = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (h < 1 || w < 1 || h > height || w > width) continue;
    const double erased = static_cast<double>(h) * w;
    if (strictArea && (erased < area.lo * pixels || erased > area.hi * pixels)) continue;
    const int top = static_cast<int>(rng.uniform_int(0, height - h));
    const int left = static_cast<int>(rng.uniform_int(0, width - w));
    return Box{top, left, h, w};
  }
  return std::nullopt;
}

Image erase_box(const Image& img, const Box& box, EraseFill fill, std::span<const float> constant,
                std::uint64_t noiseSeed) {
  if (fill == EraseFill::Constant) return fill_box(img, box, constant);
  RngStream noise(noiseSeed, 0);
  Image out = img;
  const int y0 = std::max(box.top, 0), y1 = std::min(box.top + box.height, img.height());
  const int x0 = std::max(box.left, 0), x1 = std::min(box.left + box.width, img.width());
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = static_cast<float>(noise.uniform01());
  return out;
}

Image random_erase(const Image& img, RangeD area, RangeD aspect, RngStream& rng, const EraseOptions& options) {
  const auto box = sample_erase_box(img.height(), img.width(), area, aspect, rng, options.maxAttempts);
  const std::uint64_t noiseSeed = rng.next_u64();
  if (!box) return img;
  const Fill constant = resolve_fill(options.constant, img.channels());
  return erase_box(img, *box, options.fill, constant, noiseSeed);
}

// ---- dispatch -------------------------------------------------------------

TransformParams sample_params(const TransformSpec& spec, int height, int width, int channels, RngStream& rng) {
  validate(spec);
  TransformParams p;
  p.kind = spec.kind;
  p.value = spec.strength;
  p.interp = spec.interp;
  p.eraseFill = spec.eraseFill;
  p.fill = resolve_fill(spec.fill, channels);
  const int s = static_cast<int>(spec.strength);
  switch (spec.kind) {
    case TransformKind::ShearX:
    case TransformKind::ShearY:
    case TransformKind::TranslateX:
    case TransformKind::TranslateY:
    case TransformKind::Rotate:
      if (rng.bernoulli(0.5)) p.value = -p.value;
      break;
    case TransformKind::Padcrop:
      p.top = static_cast<int>(rng.uniform_int(0, 2 * s));
      p.left = static_cast<int>(rng.uniform_int(0, 2 * s));
      break;
    case TransformKind::Cutout: {
      const Box b = sample_cutout_box(height, width, s,
                                      spec.insideOnly ? CutoutVariant::InsideOnly : CutoutVariant::Standard, rng);
      p.top = b.top;
      p.left = b.left;
      p.boxHeight = b.height;
      p.boxWidth = b.width;
      break;
    }
    case TransformKind::Cropshift:
      p.crop = sample_cropshift(height, width, s, rng);
      break;
    case TransformKind::RandomErasing: {
      const auto b = sample_erase_box(height, width, {spec.strength, spec.strength}, {0.3, 3.3}, rng);
      if (b) {
        p.top = b->top;
        p.left = b->left;
        p.boxHeight = b->height;
        p.boxWidth = b->width;
      }
      p.noiseSeed = rng.next_u64();
      break;
    }
    default:
      break;
  }
  return p;
}

Image apply_params(const TransformParams& p, const Image& img) {
  const Fill fill = resolve_fill(p.fill, img.channels());
  Image out;
  switch (p.kind) {
    case TransformKind::Identity: return img;
    case TransformKind::ShearX: out = shear_x(img, p.value, p.interp, fill); break;
    case TransformKind::ShearY: out = shear_y(img, p.value, p.interp, fill); break;
    case TransformKind::TranslateX: out = translate_x(img, p.value, p.interp, fill); break;
    case TransformKind::TranslateY: out = translate_y(img, p.value, p.interp, fill); break;
    case TransformKind::Rotate: out = rotate(img, p.value, p.interp, fill); break;
    case TransformKind::Color: out = color(img, p.value); break;
    case TransformKind::Sharpness: out = sharpness(img, p.value); break;
    case TransformKind::Brightness: out = brightness(img, p.value); break;
    case TransformKind::Contrast: out = contrast(img, p.value); break;
    case TransformKind::Solarize: out = solarize(img, p.value); break;
    case TransformKind::Equalize: out = equalize(img); break;
    case TransformKind::Autocontrast: out = autocontrast(img); break;
    case TransformKind::HorizontalFlip: out = horizontal_flip(img); break;
    case TransformKind::Padcrop: out = padcrop_at(img, static_cast<int>(p.value), p.top, p.left, fill); break;
    case TransformKind::Cutout:
      if (p.boxHeight == 0) return img;
      out = fill_box(img, {p.top, p.left, p.boxHeight, p.boxWidth}, fill);
      break;
    case TransformKind::Cropshift: out = cropshift_fixed(img, p.crop, fill); break;
    case TransformKind::RandomErasing:
      if (p.boxHeight == 0) return img;
      out = erase_box(img, {p.top, p.left, p.boxHeight, p.boxWidth}, p.eraseFill, fill, p.noiseSeed);
      break;
  }
  return out;
}

TransformSpec fix_placement(TransformSpec spec, int height, int width, int channels, RngStream& rng) {
  spec.placement = Placement::Fixed;
  spec.fixed = sample_params(spec, height, width, channels, rng);
  return spec;
}

Image apply_transform(const TransformSpec& spec, const Image& img, RngStream& rng) {
  if (spec.placement == Placement::Fixed) {
    if (!spec.fixed) throw std::invalid_argument("apply_transform: fixed placement without cached parameters");
    return apply_params(*spec.fixed, img);
  }
  return apply_params(sample_params(spec, img.height(), img.width(), img.channels(), rng), img);
}

}  // namespace augat
