#include "augat/cropshift.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace augat {

Composition sample_composition(int lines, RngStream& rng) {
  if (lines < 0) throw std::invalid_argument("sample_composition: negative line count");
  // Floyd's algorithm: a uniform 3-subset of {0, ..., N + 2}.
  const int slots = lines + 3;
  std::array<int, 3> cuts{};
  int chosen = 0;
  for (int j = slots - 3; j < slots; ++j) {
    const int t = static_cast<int>(rng.uniform_int(0, j));
    const bool seen = std::find(cuts.begin(), cuts.begin() + chosen, t) != cuts.begin() + chosen;
    cuts[chosen++] = seen ? j : t;
  }
  std::sort(cuts.begin(), cuts.end());
  return Composition{cuts[0], cuts[1] - cuts[0] - 1, cuts[2] - cuts[1] - 1, slots - 1 - cuts[2]};
}

CropshiftParams sample_cropshift(int height, int width, int lines, RngStream& rng) {
  if (lines < 0 || lines >= std::min(height, width))
    throw std::invalid_argument("cropshift: strength " + std::to_string(lines) + " outside [0, min(H, W))");
  CropshiftParams p;
  p.lines = lines;
  p.removed = sample_composition(lines, rng);
  p.shiftX = static_cast<int>(rng.uniform_int(0, p.removed.left + p.removed.right));
  p.shiftY = static_cast<int>(rng.uniform_int(0, p.removed.top + p.removed.bottom));
  return p;
}

void validate(const CropshiftParams& p, int height, int width) {
  const Composition& c = p.removed;
  if (c.left < 0 || c.right < 0 || c.top < 0 || c.bottom < 0 || c.total() != p.lines)
    throw std::invalid_argument("cropshift: removed lines must be non-negative and sum to N");
  if (c.left + c.right >= width || c.top + c.bottom >= height)
    throw std::invalid_argument("cropshift: crop removes the whole image");
  if (p.shiftX < 0 || p.shiftX > c.left + c.right || p.shiftY < 0 || p.shiftY > c.top + c.bottom)
    throw std::invalid_argument("cropshift: shift places the crop outside the canvas");
}

Image cropshift_fixed(const Image& img, const CropshiftParams& p, std::span<const float> fill) {
  validate(p, img.height(), img.width());
  const int ch = img.channels();
  if (fill.size() != static_cast<std::size_t>(ch)) throw std::invalid_argument("cropshift: fill length != channels");

  Image out(img.height(), img.width(), ch);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = fill[i % ch];

  const int cropW = img.width() - p.removed.left - p.removed.right;
  const int cropH = img.height() - p.removed.top - p.removed.bottom;
  const auto src = img.data();
  for (int y = 0; y < cropH; ++y) {
    const auto from = src.begin() + static_cast<std::ptrdiff_t>(img.index(p.removed.top + y, p.removed.left, 0));
    const auto to = dst.begin() + static_cast<std::ptrdiff_t>(out.index(p.shiftY + y, p.shiftX, 0));
    std::copy(from, from + static_cast<std::ptrdiff_t>(cropW) * ch, to);
  }
  return out;
}

Image cropshift(const Image& img, int lines, RngStream& rng, std::span<const float> fill) {
  return cropshift_fixed(img, sample_cropshift(img.height(), img.width(), lines, rng), fill);
}

}  // namespace augat
