#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "augat/image.hpp"

namespace augat {

/// Malformed input data. `offset` is the byte offset of the failure when it
/// is known, otherwise -1.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::int64_t offset = -1);
  std::int64_t offset() const noexcept { return offset_; }

 private:
  std::int64_t offset_;
};

/// CIFAR-10 binary batches: records of one label byte followed by 3072 pixel
/// bytes (R plane, G plane, B plane; each 32x32 row-major).
inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarRecord = 1 + 3 * kCifarSide * kCifarSide;

Dataset parse_cifar_binary(std::span<const std::uint8_t> bytes, int classCount = 10);
Dataset load_cifar_binary(const std::filesystem::path& path, int classCount = 10);
/// Pixels are quantized with lround(v * 255). Requires 32x32x3 images and
/// labels below 256.
std::vector<std::uint8_t> serialize_cifar_binary(const Dataset& data);
void write_cifar_binary(const std::filesystem::path& path, const Dataset& data);

/// 8-bit PNG. Gray and gray+alpha load as one channel, everything else as
/// RGB; alpha is dropped.
Image load_png(const std::filesystem::path& path);
/// A non-empty `comment` is stored as a tEXt chunk.
void write_png(const std::filesystem::path& path, const Image& img, const std::string& comment = {});

/// One sub-directory per class (sorted by name), each holding PNG files.
Dataset load_png_directory(const std::filesystem::path& root, std::vector<std::string>* classNames = nullptr);

/// Two-or-more-class synthetic images: each class owns a colored Gaussian
/// blob template placed at a random position over a textured background.
struct SyntheticSpec {
  std::size_t count = 2000;
  int height = 16;
  int width = 16;
  int channels = 3;
  int classCount = 2;
  /// Blob contrast against the background.
  double margin = 0.35;
  /// Per-pixel Gaussian noise standard deviation.
  double noise = 0.08;
  /// Fraction of labels replaced by a different random class.
  double labelNoise = 0.0;
  /// Maximum blob offset from the image center, in pixels.
  int jitter = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic in (spec, streamId); use different stream ids for train and
/// test splits drawn from the same class templates.
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t streamId = 0);

}  // namespace augat
