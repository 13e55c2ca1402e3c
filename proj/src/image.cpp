#include "augat/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace augat {

Image::Image(int height, int width, int channels, float value)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || (channels != 1 && channels != 3))
    throw std::invalid_argument("Image: bad shape");
  data_.assign(static_cast<std::size_t>(height) * width * channels, value);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 0 || width < 0 || (channels != 1 && channels != 3))
    throw std::invalid_argument("Image: bad shape");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels)
    throw std::invalid_argument("Image: data length does not match shape");
}

bool Image::in_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

bool bit_equal(const Image& a, const Image& b) noexcept {
  if (!a.same_shape(b)) return false;
  return a.size() == 0 || std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Dataset::Dataset(std::vector<Image> imgs, std::vector<int> lbls, int classes)
    : images(std::move(imgs)), labels(std::move(lbls)), classCount(classes) {
  if (images.size() != labels.size()) throw std::invalid_argument("Dataset: images and labels differ in length");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classCount)
      throw std::invalid_argument("Dataset: label " + std::to_string(labels[i]) + " out of range at index " +
                                  std::to_string(i));
    if (i > 0 && !images[i].same_shape(images[0]))
      throw std::invalid_argument("Dataset: mixed image shapes at index " + std::to_string(i));
  }
}

Fill uniform_fill(int channels, float value) { return Fill(static_cast<std::size_t>(channels), value); }

Image resample(const Image& img, const AffineMap& m, Interp method, std::span<const float> fill) {
  for (double v : m)
    if (!std::isfinite(v)) throw std::invalid_argument("resample: non-finite map entry");
  const int h = img.height(), w = img.width(), c = img.channels();
  if (fill.size() != static_cast<std::size_t>(c)) throw std::invalid_argument("resample: fill length != channels");

  Image out(h, w, c);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double x = j + 0.5, y = i + 0.5;
      const double sx = m[0] * x + m[1] * y + m[2];
      const double sy = m[3] * x + m[4] * y + m[5];
      if (method == Interp::Nearest) {
        const double fx = std::floor(sx), fy = std::floor(sy);
        const bool inside = fx >= 0 && fy >= 0 && fx < w && fy < h;
        for (int k = 0; k < c; ++k)
          out.at(i, j, k) = inside ? img.at(static_cast<int>(fy), static_cast<int>(fx), k) : fill[k];
        continue;
      }
      // Bilinear on pixel-center lattice; off-image neighbours read as fill.
      const double u = sx - 0.5, v = sy - 0.5;
      const double u0 = std::floor(u), v0 = std::floor(v);
      const double au = u - u0, av = v - v0;
      const int x0 = static_cast<int>(std::clamp(u0, -2.0, static_cast<double>(w) + 1));
      const int y0 = static_cast<int>(std::clamp(v0, -2.0, static_cast<double>(h) + 1));
      auto sample = [&](int yy, int xx, int k) -> double {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return fill[k];
        return img.at(yy, xx, k);
      };
      for (int k = 0; k < c; ++k) {
        const double top = sample(y0, x0, k) * (1.0 - au) + sample(y0, x0 + 1, k) * au;
        const double bottom = sample(y0 + 1, x0, k) * (1.0 - au) + sample(y0 + 1, x0 + 1, k) * au;
        out.at(i, j, k) = static_cast<float>(top * (1.0 - av) + bottom * av);
      }
    }
  }
  return out;
}

Image clamp01(const Image& img) {
  std::vector<float> data(img.values());
  for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
  return Image(img.height(), img.width(), img.channels(), std::move(data));
}

}  // namespace augat
