#include "augat/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace augat::nn {
namespace {

using Geometry = Model::Geometry;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int to_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("model spec: bad ") + what + " '" + s + "'");
  }
}

void conv_forward(const Geometry& g, const LayerSpec& l, const float* w, const float* b, const float* in,
                  float* out) {
  const int k = l.kernel, s = l.stride, pad = k / 2;
  const int oc = g.outC, ic = g.inC;
  for (int oy = 0; oy < g.outH; ++oy)
    for (int ox = 0; ox < g.outW; ++ox) {
      float* o = out + (static_cast<std::size_t>(oy) * g.outW + ox) * oc;
      std::copy(b, b + oc, o);
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * s + ky - pad;
        if (iy < 0 || iy >= g.inH) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * s + kx - pad;
          if (ix < 0 || ix >= g.inW) continue;
          const float* ip = in + (static_cast<std::size_t>(iy) * g.inW + ix) * ic;
          const float* wp = w + static_cast<std::size_t>(ky * k + kx) * ic * oc;
          for (int c = 0; c < ic; ++c) {
            const float v = ip[c];
            if (v == 0.0f) continue;
            const float* wr = wp + static_cast<std::size_t>(c) * oc;
            for (int o2 = 0; o2 < oc; ++o2) o[o2] += v * wr[o2];
          }
        }
      }
    }
}

void conv_backward(const Geometry& g, const LayerSpec& l, const float* w, const float* in, const float* gout,
                   float* gin, float* gw, float* gb) {
  const int k = l.kernel, s = l.stride, pad = k / 2;
  const int oc = g.outC, ic = g.inC;
  for (int oy = 0; oy < g.outH; ++oy)
    for (int ox = 0; ox < g.outW; ++ox) {
      const float* go = gout + (static_cast<std::size_t>(oy) * g.outW + ox) * oc;
      if (gb)
        for (int o2 = 0; o2 < oc; ++o2) gb[o2] += go[o2];
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * s + ky - pad;
        if (iy < 0 || iy >= g.inH) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * s + kx - pad;
          if (ix < 0 || ix >= g.inW) continue;
          const std::size_t inOff = (static_cast<std::size_t>(iy) * g.inW + ix) * ic;
          const std::size_t wOff = static_cast<std::size_t>(ky * k + kx) * ic * oc;
          for (int c = 0; c < ic; ++c) {
            const float* wr = w + wOff + static_cast<std::size_t>(c) * oc;
            if (gw) {
              const float v = in[inOff + c];
              if (v != 0.0f) {
                float* gwr = gw + wOff + static_cast<std::size_t>(c) * oc;
                for (int o2 = 0; o2 < oc; ++o2) gwr[o2] += v * go[o2];
              }
            }
            if (gin) {
              float acc = 0.0f;
              for (int o2 = 0; o2 < oc; ++o2) acc += wr[o2] * go[o2];
              gin[inOff + c] += acc;
            }
          }
        }
      }
    }
}

void dense_forward(const Geometry& g, const float* w, const float* b, const float* in, float* out) {
  const std::size_t n = g.in_size();
  const int oc = g.outC;
  std::copy(b, b + oc, out);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = in[i];
    if (v == 0.0f) continue;
    const float* wr = w + i * oc;
    for (int o = 0; o < oc; ++o) out[o] += v * wr[o];
  }
}

void dense_backward(const Geometry& g, const float* w, const float* in, const float* gout, float* gin, float* gw,
                    float* gb) {
  const std::size_t n = g.in_size();
  const int oc = g.outC;
  if (gb)
    for (int o = 0; o < oc; ++o) gb[o] += gout[o];
  for (std::size_t i = 0; i < n; ++i) {
    const float* wr = w + i * oc;
    if (gw && in[i] != 0.0f) {
      float* gwr = gw + i * oc;
      for (int o = 0; o < oc; ++o) gwr[o] += in[i] * gout[o];
    }
    if (gin) {
      float acc = 0.0f;
      for (int o = 0; o < oc; ++o) acc += wr[o] * gout[o];
      gin[i] += acc;
    }
  }
}

void check_input(const Model& model, const Image& img) {
  const ModelSpec& s = model.spec();
  if (img.height() != s.height || img.width() != s.width || img.channels() != s.channels)
    throw std::invalid_argument("model input is " + std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
                                std::to_string(s.channels) + ", got " + std::to_string(img.height()) + "x" +
                                std::to_string(img.width()) + "x" + std::to_string(img.channels()));
}

/// Forward pass keeping every activation; acts[0] is the input.
void forward_all(const Model& model, const Image& img, std::vector<std::vector<float>>& acts) {
  const auto& layers = model.spec().layers;
  const auto& geo = model.geometry();
  const float* params = model.parameters().data();
  acts.resize(layers.size() + 1);
  acts[0].assign(img.data().begin(), img.data().end());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Geometry& g = geo[i];
    acts[i + 1].assign(g.out_size(), 0.0f);
    const float* in = acts[i].data();
    float* out = acts[i + 1].data();
    const float* w = params + g.paramOffset;
    switch (layers[i].type) {
      case LayerType::Conv: conv_forward(g, layers[i], w, w + g.weightCount, in, out); break;
      case LayerType::Dense: dense_forward(g, w, w + g.weightCount, in, out); break;
      case LayerType::Relu:
        for (std::size_t j = 0; j < g.out_size(); ++j) out[j] = in[j] > 0.0f ? in[j] : 0.0f;
        break;
    }
  }
}

double softmax_xent(std::span<const float> logits, int label, std::vector<float>* gradLogits) {
  const float m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (float z : logits) sum += std::exp(static_cast<double>(z) - m);
  const double lse = m + std::log(sum);
  if (gradLogits) {
    gradLogits->resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c)
      (*gradLogits)[c] = static_cast<float>(std::exp(logits[c] - lse) - (static_cast<int>(c) == label ? 1.0 : 0.0));
  }
  return lse - logits[static_cast<std::size_t>(label)];
}

/// Backward pass for one example from the logit gradient; accumulates into
/// `paramGrads` and writes the input gradient when requested.
void backward_one(const Model& model, const std::vector<std::vector<float>>& acts, std::vector<float> grad,
                  float* paramGrads, std::vector<float>* inputGrad, std::vector<float>& scratch) {
  const auto& layers = model.spec().layers;
  const auto& geo = model.geometry();
  const float* params = model.parameters().data();
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Geometry& g = geo[li];
    const bool needInput = li > 0 || inputGrad != nullptr;
    scratch.assign(needInput ? g.in_size() : 0, 0.0f);
    float* gin = needInput ? scratch.data() : nullptr;
    const float* w = params + g.paramOffset;
    float* gw = paramGrads ? paramGrads + g.paramOffset : nullptr;
    float* gb = gw ? gw + g.weightCount : nullptr;
    switch (layers[li].type) {
      case LayerType::Conv: conv_backward(g, layers[li], w, acts[li].data(), grad.data(), gin, gw, gb); break;
      case LayerType::Dense: dense_backward(g, w, acts[li].data(), grad.data(), gin, gw, gb); break;
      case LayerType::Relu:
        if (gin)
          for (std::size_t j = 0; j < g.in_size(); ++j) gin[j] = acts[li][j] > 0.0f ? grad[j] : 0.0f;
        break;
    }
    if (!needInput) break;
    grad.swap(scratch);
  }
  if (inputGrad) *inputGrad = std::move(grad);
}

}  // namespace

// ---- ModelSpec --------------------------------------------------------------

ModelSpec ModelSpec::parse(std::string_view text, int height, int width, int channels, int classCount) {
  ModelSpec spec;
  spec.height = height;
  spec.width = width;
  spec.channels = channels;
  spec.classCount = classCount;
  for (const std::string& token : split(text, ',')) {
    const auto parts = split(token, ':');
    LayerSpec l;
    if (parts[0] == "relu" && parts.size() == 1) {
      l.type = LayerType::Relu;
    } else if (parts[0] == "dense" && parts.size() == 2) {
      l.type = LayerType::Dense;
      l.units = to_int(parts[1], "dense width");
    } else if (parts[0] == "conv" && (parts.size() == 3 || parts.size() == 4)) {
      l.type = LayerType::Conv;
      l.units = to_int(parts[1], "conv channels");
      l.kernel = to_int(parts[2], "conv kernel");
      l.stride = parts.size() == 4 ? to_int(parts[3], "conv stride") : 1;
    } else {
      throw std::invalid_argument("model spec: bad layer '" + token + "'");
    }
    spec.layers.push_back(l);
  }
  spec.validate();
  return spec;
}

ModelSpec ModelSpec::desk_default(int height, int width, int channels, int classCount) {
  return parse("conv:16:3:2,relu,conv:32:3:2,relu,conv:64:3:2,relu,dense:" + std::to_string(classCount), height,
               width, channels, classCount);
}

std::string ModelSpec::layer_text() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) os << ',';
    const auto& l = layers[i];
    switch (l.type) {
      case LayerType::Relu: os << "relu"; break;
      case LayerType::Dense: os << "dense:" << l.units; break;
      case LayerType::Conv: os << "conv:" << l.units << ':' << l.kernel << ':' << l.stride; break;
    }
  }
  return os.str();
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  os << "in=" << height << 'x' << width << 'x' << channels << ";classes=" << classCount << ";layers=" << layer_text();
  return os.str();
}

ModelSpec ModelSpec::from_description(std::string_view text) {
  const auto fields = split(text, ';');
  if (fields.size() != 3 || fields[0].rfind("in=", 0) != 0 || fields[1].rfind("classes=", 0) != 0 ||
      fields[2].rfind("layers=", 0) != 0)
    throw std::invalid_argument("model description: expected in=HxWxC;classes=N;layers=...");
  const auto dims = split(std::string_view(fields[0]).substr(3), 'x');
  if (dims.size() != 3) throw std::invalid_argument("model description: bad input shape");
  return parse(std::string_view(fields[2]).substr(7), to_int(dims[0], "height"), to_int(dims[1], "width"),
               to_int(dims[2], "channels"), to_int(fields[1].substr(8), "class count"));
}

std::uint64_t ModelSpec::fingerprint() const { return fnv1a(describe()); }

void ModelSpec::validate() const {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
    throw std::invalid_argument("model spec: bad input shape");
  if (classCount < 2) throw std::invalid_argument("model spec: need at least two classes");
  if (layers.empty() || layers.back().type != LayerType::Dense || layers.back().units != classCount)
    throw std::invalid_argument("model spec: last layer must be dense with classCount units");
  for (const auto& l : layers) {
    if (l.type == LayerType::Relu) continue;
    if (l.units <= 0) throw std::invalid_argument("model spec: layer width must be positive");
    if (l.type == LayerType::Conv && (l.kernel <= 0 || l.kernel % 2 == 0 || l.stride <= 0))
      throw std::invalid_argument("model spec: conv kernel must be odd and positive, stride positive");
  }
}

// ---- Model ------------------------------------------------------------------

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  int h = spec_.height, w = spec_.width, c = spec_.channels;
  std::size_t offset = 0;
  for (const auto& l : spec_.layers) {
    Geometry g{h, w, c, h, w, c, offset, 0, 0};
    switch (l.type) {
      case LayerType::Conv:
        g.outH = (h - 1) / l.stride + 1;
        g.outW = (w - 1) / l.stride + 1;
        g.outC = l.units;
        g.weightCount = static_cast<std::size_t>(l.kernel) * l.kernel * c * l.units;
        g.biasCount = static_cast<std::size_t>(l.units);
        break;
      case LayerType::Dense:
        g.outH = 1;
        g.outW = 1;
        g.outC = l.units;
        g.weightCount = g.in_size() * static_cast<std::size_t>(l.units);
        g.biasCount = static_cast<std::size_t>(l.units);
        break;
      case LayerType::Relu:
        break;
    }
    offset += g.weightCount + g.biasCount;
    h = g.outH;
    w = g.outW;
    c = g.outC;
    geometry_.push_back(g);
  }
  params_.assign(offset, 0.0f);
}

Model::Model(ModelSpec spec, std::vector<float> parameters) : Model(std::move(spec)) {
  if (parameters.size() != params_.size())
    throw std::invalid_argument("model: expected " + std::to_string(params_.size()) + " parameters, got " +
                                std::to_string(parameters.size()));
  params_ = std::move(parameters);
}

Model Model::initialized(ModelSpec spec, RngStream& rng) {
  Model m(std::move(spec));
  for (std::size_t i = 0; i < m.spec_.layers.size(); ++i) {
    const Geometry& g = m.geometry_[i];
    if (g.weightCount == 0) continue;
    const auto& l = m.spec_.layers[i];
    const double fanIn = l.type == LayerType::Conv ? static_cast<double>(l.kernel) * l.kernel * g.inC
                                                   : static_cast<double>(g.in_size());
    const double stddev = std::sqrt(2.0 / fanIn);
    for (std::size_t j = 0; j < g.weightCount; ++j)
      m.params_[g.paramOffset + j] = static_cast<float>(rng.normal() * stddev);
  }
  return m;
}

// ---- forward / loss ---------------------------------------------------------

double cross_entropy(std::span<const float> logits, int label) { return softmax_xent(logits, label, nullptr); }

bool misclassified(std::span<const float> logits, int label) {
  const float own = logits[static_cast<std::size_t>(label)];
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (static_cast<int>(c) != label && logits[c] >= own) return true;
  return false;
}

std::vector<float> forward(const Model& model, std::span<const Image> batch) {
  const int classes = model.spec().classCount;
  std::vector<float> logits(batch.size() * static_cast<std::size_t>(classes));
  std::vector<std::vector<float>> acts;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    check_input(model, batch[b]);
    forward_all(model, batch[b], acts);
    std::copy(acts.back().begin(), acts.back().end(), logits.begin() + static_cast<std::ptrdiff_t>(b * classes));
  }
  return logits;
}

std::vector<int> predict(const Model& model, std::span<const Image> batch) {
  const auto logits = forward(model, batch);
  const auto classes = static_cast<std::size_t>(model.spec().classCount);
  std::vector<int> out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto first = logits.begin() + static_cast<std::ptrdiff_t>(b * classes);
    out[b] = static_cast<int>(std::max_element(first, first + static_cast<std::ptrdiff_t>(classes)) - first);
  }
  return out;
}

std::vector<double> example_losses(const Model& model, std::span<const Image> batch, std::span<const int> labels) {
  if (labels.size() != batch.size()) throw std::invalid_argument("example_losses: batch/label size mismatch");
  const auto logits = forward(model, batch);
  const auto classes = static_cast<std::size_t>(model.spec().classCount);
  std::vector<double> out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    out[b] = softmax_xent(std::span<const float>(logits).subspan(b * classes, classes), labels[b], nullptr);
  return out;
}

LossGrads loss_and_grads(const Model& model, std::span<const Image> batch, std::span<const int> labels, GradMode mode,
                         int threads) {
  if (labels.size() != batch.size()) throw std::invalid_argument("loss_and_grads: batch/label size mismatch");
  if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
  const int classes = model.spec().classCount;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    check_input(model, batch[b]);
    if (labels[b] < 0 || labels[b] >= classes) throw std::invalid_argument("loss_and_grads: label out of range");
  }
  const bool wantParams = mode != GradMode::InputsOnly;
  const bool wantInputs = mode != GradMode::ParamsOnly;
  const float scale = 1.0f / static_cast<float>(batch.size());

  LossGrads out;
  out.perExampleLoss.resize(batch.size());
  out.logits.resize(batch.size() * static_cast<std::size_t>(classes));
  if (wantInputs) out.inputGrads.resize(batch.size());

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, batch.size());
  std::vector<std::vector<float>> partial(workers);
  auto work = [&](std::size_t t) {
    const std::size_t begin = batch.size() * t / workers, end = batch.size() * (t + 1) / workers;
    if (wantParams) partial[t].assign(model.parameter_count(), 0.0f);
    std::vector<std::vector<float>> acts;
    std::vector<float> gradLogits, scratch;
    for (std::size_t b = begin; b < end; ++b) {
      forward_all(model, batch[b], acts);
      out.perExampleLoss[b] = softmax_xent(acts.back(), labels[b], &gradLogits);
      std::copy(acts.back().begin(), acts.back().end(), out.logits.begin() + static_cast<std::ptrdiff_t>(b * classes));
      for (float& g : gradLogits) g *= scale;
      backward_one(model, acts, gradLogits, wantParams ? partial[t].data() : nullptr,
                   wantInputs ? &out.inputGrads[b] : nullptr, scratch);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  if (wantParams) {
    out.paramGrads = std::move(partial[0]);
    for (std::size_t t = 1; t < workers; ++t)
      for (std::size_t i = 0; i < out.paramGrads.size(); ++i) out.paramGrads[i] += partial[t][i];
  }
  double total = 0.0;
  for (double l : out.perExampleLoss) total += l;
  out.loss = total / static_cast<double>(batch.size());
  return out;
}

// ---- optimizer --------------------------------------------------------------

double OptimizerState::lr_at(int epoch) const {
  double lr = learningRate;
  for (const auto& m : schedule)
    if (epoch >= m.epoch) lr *= m.multiplier;
  return lr;
}

void sgd_step(Model& model, std::span<const float> grads, OptimizerState& opt, int epoch) {
  auto params = model.parameters();
  if (grads.size() != params.size()) throw std::invalid_argument("sgd_step: gradient size mismatch");
  if (opt.velocity.empty()) opt.velocity.assign(params.size(), 0.0f);
  if (opt.velocity.size() != params.size()) throw std::invalid_argument("sgd_step: velocity size mismatch");
  const float lr = static_cast<float>(opt.lr_at(epoch));
  const float mu = static_cast<float>(opt.momentum);
  const float wd = static_cast<float>(opt.weightDecay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    opt.velocity[i] = mu * opt.velocity[i] + (grads[i] + wd * params[i]);
    params[i] -= lr * opt.velocity[i];
  }
}

// ---- weight averaging ---------------------------------------------------------

AveragedModel::AveragedModel(const ModelSpec& spec, int startEpoch)
    : spec_(spec), fingerprint_(spec.fingerprint()), mean_(Model(spec).parameter_count(), 0.0), startEpoch_(startEpoch) {}

void AveragedModel::update(const Model& model) {
  if (model.fingerprint() != fingerprint_) throw std::invalid_argument("swa_update: architecture fingerprint mismatch");
  const auto params = model.parameters();
  const double n = static_cast<double>(count_) + 1.0;
  for (std::size_t i = 0; i < mean_.size(); ++i) mean_[i] += (params[i] - mean_[i]) / n;
  ++count_;
}

Model AveragedModel::model() const {
  std::vector<float> params(mean_.size());
  std::transform(mean_.begin(), mean_.end(), params.begin(), [](double v) { return static_cast<float>(v); });
  return Model(spec_, std::move(params));
}

AveragedModel swa_update(AveragedModel avg, const Model& model) {
  avg.update(model);
  return avg;
}

// ---- checkpoints ----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'U', 'G', 'A', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw std::runtime_error(std::string("checkpoint truncated reading ") + what);
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& out, std::string_view s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const char* what) {
  const auto n = get_le<std::uint32_t>(in, what);
  if (n > (1u << 24)) throw std::runtime_error(std::string("checkpoint: implausible length for ") + what);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw std::runtime_error(std::string("checkpoint truncated reading ") + what);
  return s;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model, std::string_view metadata) {
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, model.fingerprint());
  put_string(out, model.spec().describe());
  put_string(out, metadata);
  put_le<std::uint64_t>(out, model.parameter_count());
  for (float v : model.parameters()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void save_checkpoint(const std::string& path, const Model& model, std::string_view metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  save_checkpoint(out, model, metadata);
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const auto fingerprint = get_le<std::uint64_t>(in, "fingerprint");
  const ModelSpec spec = ModelSpec::from_description(get_string(in, "model description"));
  if (spec.fingerprint() != fingerprint) throw std::runtime_error("checkpoint: architecture fingerprint mismatch");
  std::string metadata = get_string(in, "metadata");
  const auto count = get_le<std::uint64_t>(in, "parameter count");
  Model model(spec);
  if (count != model.parameter_count()) throw std::runtime_error("checkpoint: parameter count does not match model");
  std::vector<float> params(count);
  for (auto& v : params) v = std::bit_cast<float>(get_le<std::uint32_t>(in, "parameters"));
  return {Model(spec, std::move(params)), std::move(metadata)};
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace augat::nn
