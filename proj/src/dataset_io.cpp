#include "augat/dataset_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "augat/rng.hpp"

namespace augat {

DataError::DataError(const std::string& what, std::int64_t offset)
    : std::runtime_error(offset >= 0 ? what + " (byte offset " + std::to_string(offset) + ")" : what),
      offset_(offset) {}

namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(static_cast<double>(v) * 255.0), 0, 255));
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

// ---- CIFAR binary ---------------------------------------------------------------

Dataset parse_cifar_binary(std::span<const std::uint8_t> bytes, int classCount) {
  if (bytes.size() % kCifarRecord != 0) {
    const std::size_t full = bytes.size() / kCifarRecord;
    throw DataError("truncated CIFAR record " + std::to_string(full) + ": expected " + std::to_string(kCifarRecord) +
                        " bytes, found " + std::to_string(bytes.size() - full * kCifarRecord),
                    static_cast<std::int64_t>(bytes.size()));
  }
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  const std::size_t n = bytes.size() / kCifarRecord;
  std::vector<Image> images;
  std::vector<int> labels;
  images.reserve(n);
  labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t base = r * kCifarRecord;
    const int label = bytes[base];
    if (label >= classCount)
      throw DataError("label " + std::to_string(label) + " out of range", static_cast<std::int64_t>(base));
    std::vector<float> px(3 * plane);
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t c = 0; c < 3; ++c) px[p * 3 + c] = static_cast<float>(bytes[base + 1 + c * plane + p]) / 255.0f;
    images.emplace_back(static_cast<int>(kCifarSide), static_cast<int>(kCifarSide), 3, std::move(px));
    labels.push_back(label);
  }
  return Dataset(std::move(images), std::move(labels), classCount);
}

Dataset load_cifar_binary(const std::filesystem::path& path, int classCount) {
  const auto bytes = read_all(path);
  return parse_cifar_binary(bytes, classCount);
}

std::vector<std::uint8_t> serialize_cifar_binary(const Dataset& data) {
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  std::vector<std::uint8_t> out(data.size() * kCifarRecord);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Image& img = data.images[r];
    if (img.height() != 32 || img.width() != 32 || img.channels() != 3)
      throw std::invalid_argument("CIFAR serialization needs 32x32x3 images");
    if (data.labels[r] < 0 || data.labels[r] > 255) throw std::invalid_argument("CIFAR label must fit in a byte");
    const std::size_t base = r * kCifarRecord;
    out[base] = static_cast<std::uint8_t>(data.labels[r]);
    const auto px = img.data();
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t c = 0; c < 3; ++c) out[base + 1 + c * plane + p] = quantize(px[p * 3 + c]);
  }
  return out;
}

void write_cifar_binary(const std::filesystem::path& path, const Dataset& data) {
  const auto bytes = serialize_cifar_binary(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---- PNG ----------------------------------------------------------------------

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw DataError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("not a PNG file: " + path.string(), 0);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  std::vector<std::uint8_t> raw;
  int h = 0, w = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  h = static_cast<int>(png_get_image_height(png, info));
  w = static_cast<int>(png_get_image_width(png, info));
  channels = png_get_channels(png, info);
  raw.resize(static_cast<std::size_t>(h) * w * channels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = raw.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw DataError("unsupported PNG channel layout: " + path.string());
  std::vector<float> px(raw.size());
  std::transform(raw.begin(), raw.end(), px.begin(), [](std::uint8_t b) { return static_cast<float>(b) / 255.0f; });
  return Image(h, w, channels, std::move(px));
}

void write_png(const std::filesystem::path& path, const Image& img, const std::string& comment) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  const int h = img.height(), w = img.width(), c = img.channels();
  std::vector<std::uint8_t> raw(img.data().size());
  std::transform(img.data().begin(), img.data().end(), raw.begin(), quantize);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = raw.data() + static_cast<std::size_t>(y) * w * c;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::string key = "Comment";
  png_text text{};
  if (!comment.empty()) {
    text.compression = PNG_TEXT_COMPRESSION_NONE;
    text.key = key.data();
    text.text = const_cast<char*>(comment.c_str());
    text.text_length = comment.size();
    png_set_text(png, info, &text, 1);
  }
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Dataset load_png_directory(const std::filesystem::path& root, std::vector<std::string>* classNames) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  std::vector<fs::path> classes;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) classes.push_back(entry.path());
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) throw DataError("need at least two class directories under " + root.string());

  std::vector<Image> images;
  std::vector<int> labels;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(classes[c]))
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      images.push_back(load_png(f));
      labels.push_back(static_cast<int>(c));
    }
  }
  if (classNames) {
    classNames->clear();
    for (const auto& c : classes) classNames->push_back(c.filename().string());
  }
  return Dataset(std::move(images), std::move(labels), static_cast<int>(classes.size()));
}

// ---- synthetic ----------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (height < 4 || width < 4) throw std::invalid_argument("synthetic: images must be at least 4x4");
  if (channels != 1 && channels != 3) throw std::invalid_argument("synthetic: channels must be 1 or 3");
  if (classCount < 2) throw std::invalid_argument("synthetic: need at least two classes");
  if (!(margin >= 0.0) || !(noise >= 0.0)) throw std::invalid_argument("synthetic: margin and noise must be >= 0");
  if (!(labelNoise >= 0.0 && labelNoise < 1.0)) throw std::invalid_argument("synthetic: labelNoise must be in [0,1)");
  if (jitter < 0) throw std::invalid_argument("synthetic: jitter must be >= 0");
}

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t streamId) {
  spec.validate();
  struct Template {
    std::vector<double> color;
    double sigmaX, sigmaY;
  };
  RngStream tplRng(spec.seed, 0x54504C);
  std::vector<Template> templates;
  const double scale = std::min(spec.height, spec.width) / 8.0;
  for (int c = 0; c < spec.classCount; ++c) {
    Template t;
    // Evenly spaced hues keep every pair of class colors apart.
    for (int ch = 0; ch < spec.channels; ++ch)
      t.color.push_back(spec.channels == 1 ? (c % 2 == 0 ? 1.0 : -1.0)
                                           : std::cos(6.283185307179586 * (static_cast<double>(c) / spec.classCount +
                                                                           ch / 3.0)));
    // Alternate round and elongated blobs so shape also carries the label.
    const double a = scale * tplRng.uniform_real(1.0, 1.5);
    t.sigmaX = c % 2 == 0 ? a : a * 1.8;
    t.sigmaY = c % 2 == 0 ? a : a / 1.8;
    templates.push_back(std::move(t));
  }

  const RngStream root(spec.seed, mix64(streamId + 1));
  std::vector<Image> images;
  std::vector<int> labels;
  images.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    RngStream rng = root.split(i);
    const int label = static_cast<int>(i % static_cast<std::size_t>(spec.classCount));
    const Template& t = templates[static_cast<std::size_t>(label)];
    const double cy = (spec.height - 1) / 2.0 + static_cast<double>(rng.uniform_int(-spec.jitter, spec.jitter));
    const double cx = (spec.width - 1) / 2.0 + static_cast<double>(rng.uniform_int(-spec.jitter, spec.jitter));
    // Low-frequency background texture, different for every image.
    const double fy = rng.uniform_real(0.2, 0.9), fx = rng.uniform_real(0.2, 0.9);
    const double phase = rng.uniform_real(0.0, 6.283185307179586);
    std::vector<double> tint(static_cast<std::size_t>(spec.channels));
    for (auto& v : tint) v = rng.uniform_real(-0.1, 0.1);

    Image img(spec.height, spec.width, spec.channels);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        const double dx = (x - cx) / t.sigmaX, dy = (y - cy) / t.sigmaY;
        const double blob = std::exp(-0.5 * (dx * dx + dy * dy));
        const double wave = 0.08 * std::sin(fy * y + fx * x + phase);
        for (int ch = 0; ch < spec.channels; ++ch) {
          const double v = 0.5 + wave + tint[static_cast<std::size_t>(ch)] +
                           spec.margin * blob * t.color[static_cast<std::size_t>(ch)] + spec.noise * rng.normal();
          img.at(y, x, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    int shown = label;
    if (spec.labelNoise > 0.0 && rng.uniform01() < spec.labelNoise)
      shown = static_cast<int>((label + rng.uniform_int(1, spec.classCount - 1)) % spec.classCount);
    images.push_back(std::move(img));
    labels.push_back(shown);
  }
  return Dataset(std::move(images), std::move(labels), spec.classCount);
}

}  // namespace augat
