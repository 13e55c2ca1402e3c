#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace augat {

/// Dense H x W x C image, row-major with interleaved channels.
///
/// Values produced by library operations lie in [0, 1]. The container itself
/// does not clamp, so clamp01() exists for values computed elsewhere.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float value = 0.0f);
  Image(int height, int width, int channels, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  float& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool in_unit_range() const noexcept;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Bitwise equality of shape and pixel data (distinguishes -0 from +0).
bool bit_equal(const Image& a, const Image& b) noexcept;

/// Labelled image collection. All images share one shape.
struct Dataset {
  Dataset() = default;
  Dataset(std::vector<Image> images, std::vector<int> labels, int classCount);

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }

  std::vector<Image> images;
  std::vector<int> labels;
  int classCount = 0;
};

using Fill = std::vector<float>;

/// Constant fill vector of the given channel count.
Fill uniform_fill(int channels, float value = 0.0f);

enum class Interp { Nearest, Bilinear };

/// Inverse affine map from output to source coordinates:
///   sx = m[0]*x + m[1]*y + m[2],  sy = m[3]*x + m[4]*y + m[5]
/// with (x, y) the continuous coordinate of an output pixel center, so pixel
/// (i, j) has center (j + 0.5, i + 0.5).
using AffineMap = std::array<double, 6>;

inline constexpr AffineMap kIdentityMap{1, 0, 0, 0, 1, 0};

/// Resample `img` through `inverseMap`. Source coordinates outside the image
/// take `fill`. Throws std::invalid_argument on non-finite entries or a fill
/// of the wrong length.
Image resample(const Image& img, const AffineMap& inverseMap, Interp method, std::span<const float> fill);

Image clamp01(const Image& img);

}  // namespace augat
