#pragma once

#include <span>

#include "augat/image.hpp"
#include "augat/rng.hpp"

namespace augat {

/// Lines removed from each border. Sums to the Cropshift strength N.
struct Composition {
  int left = 0;
  int right = 0;
  int top = 0;
  int bottom = 0;

  int total() const noexcept { return left + right + top + bottom; }
  bool operator==(const Composition&) const = default;
};

/// One Cropshift application: the (W - l - r) x (H - t - b) block starting at
/// source (t, l) is copied to output position (shiftY, shiftX).
/// Valid placements satisfy 0 <= shiftX <= l + r and 0 <= shiftY <= t + b.
struct CropshiftParams {
  int lines = 0;
  Composition removed;
  int shiftX = 0;
  int shiftY = 0;

  bool operator==(const CropshiftParams&) const = default;
};

/// Uniform over the C(N+3, 3) weak compositions of N into four parts:
/// three distinct cut points drawn from N + 3 slots (stars and bars).
/// Throws std::invalid_argument for negative N.
Composition sample_composition(int lines, RngStream& rng);

/// Composition followed by a placement uniform over the
/// (l + r + 1) x (t + b + 1) valid positions.
CropshiftParams sample_cropshift(int height, int width, int lines, RngStream& rng);

/// Throws std::invalid_argument if `params` is inconsistent or does not fit
/// an image of the given size.
void validate(const CropshiftParams& params, int height, int width);

/// Requires 0 <= N < min(H, W).
Image cropshift(const Image& img, int lines, RngStream& rng, std::span<const float> fill);
Image cropshift_fixed(const Image& img, const CropshiftParams& params, std::span<const float> fill);

}  // namespace augat
