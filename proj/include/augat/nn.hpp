#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augat/image.hpp"
#include "augat/rng.hpp"

namespace augat::nn {

enum class LayerType { Conv, Relu, Dense };

struct LayerSpec {
  LayerType type = LayerType::Relu;
  /// Output channels (Conv) or width (Dense).
  int units = 0;
  int kernel = 0;
  int stride = 1;
  bool operator==(const LayerSpec&) const = default;
};

/// Input shape, class count and layer list. Convolutions use "same" padding
/// (kernel / 2). The last layer must be Dense with `classCount` units.
struct ModelSpec {
  int height = 0;
  int width = 0;
  int channels = 0;
  int classCount = 0;
  std::vector<LayerSpec> layers;

  /// Layer text such as "conv:16:3:2,relu,conv:32:3:2,relu,dense:10".
  static ModelSpec parse(std::string_view layers, int height, int width, int channels, int classCount);
  /// Three conv blocks (16/32/64 channels, 3x3, stride 2) and a dense head.
  static ModelSpec desk_default(int height, int width, int channels, int classCount);

  std::string layer_text() const;
  /// Canonical one-line description including the input shape.
  std::string describe() const;
  static ModelSpec from_description(std::string_view text);
  std::uint64_t fingerprint() const;
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

class Model {
 public:
  struct Geometry {
    int inH, inW, inC;
    int outH, outW, outC;
    std::size_t paramOffset;
    std::size_t weightCount;
    std::size_t biasCount;
    std::size_t in_size() const { return static_cast<std::size_t>(inH) * inW * inC; }
    std::size_t out_size() const { return static_cast<std::size_t>(outH) * outW * outC; }
  };

  /// All parameters zero.
  explicit Model(ModelSpec spec);
  Model(ModelSpec spec, std::vector<float> parameters);
  /// Kaiming (fan-in) normal weights, zero biases.
  static Model initialized(ModelSpec spec, RngStream& rng);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<Geometry>& geometry() const noexcept { return geometry_; }
  std::span<float> parameters() noexcept { return params_; }
  std::span<const float> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::uint64_t fingerprint() const { return spec_.fingerprint(); }

 private:
  ModelSpec spec_;
  std::vector<Geometry> geometry_;
  std::vector<float> params_;
};

/// Logits, row-major batch x classCount. Throws std::invalid_argument when
/// an image shape does not match the model input.
std::vector<float> forward(const Model& model, std::span<const Image> batch);
std::vector<int> predict(const Model& model, std::span<const Image> batch);

enum class GradMode { ParamsOnly, InputsOnly, Both };

/// Mean softmax cross-entropy over the batch and its gradients. Gradients
/// are of the mean loss; `perExampleLoss` holds the unaveraged losses.
struct LossGrads {
  double loss = 0.0;
  std::vector<double> perExampleLoss;
  /// Row-major batch x classCount.
  std::vector<float> logits;
  std::vector<float> paramGrads;
  std::vector<std::vector<float>> inputGrads;
};

LossGrads loss_and_grads(const Model& model, std::span<const Image> batch, std::span<const int> labels,
                         GradMode mode = GradMode::Both, int threads = 1);

/// Softmax cross-entropy of one logit row, in double precision.
double cross_entropy(std::span<const float> logits, int label);
/// True when the label's logit is not the unique strict maximum.
bool misclassified(std::span<const float> logits, int label);

/// Per-example cross-entropy without gradients.
std::vector<double> example_losses(const Model& model, std::span<const Image> batch, std::span<const int> labels);

struct LrMilestone {
  int epoch = 0;
  double multiplier = 1.0;
};

struct OptimizerState {
  double learningRate = 0.1;
  double momentum = 0.9;
  double weightDecay = 5e-4;
  /// Multipliers apply from their epoch onward and compound.
  std::vector<LrMilestone> schedule;
  std::vector<float> velocity;

  double lr_at(int epoch) const;
};

/// v <- momentum * v + (g + weightDecay * theta); theta <- theta - lr(epoch) * v.
void sgd_step(Model& model, std::span<const float> grads, OptimizerState& opt, int epoch);

/// Running arithmetic mean of parameter snapshots.
class AveragedModel {
 public:
  AveragedModel(const ModelSpec& spec, int startEpoch = 0);

  /// avg <- avg + (theta - avg) / (n + 1). Throws std::invalid_argument when
  /// the architecture fingerprint differs.
  void update(const Model& model);
  Model model() const;
  int count() const noexcept { return count_; }
  int start_epoch() const noexcept { return startEpoch_; }
  std::span<const double> mean() const noexcept { return mean_; }

 private:
  ModelSpec spec_;
  std::uint64_t fingerprint_;
  std::vector<double> mean_;
  int count_ = 0;
  int startEpoch_ = 0;
};

AveragedModel swa_update(AveragedModel avg, const Model& model);

/// Binary checkpoint: "AUGATCKP", u32 version, u64 fingerprint, length-
/// prefixed model description and metadata strings, u64 parameter count,
/// then little-endian f32 parameters.
void save_checkpoint(std::ostream& out, const Model& model, std::string_view metadata = {});
void save_checkpoint(const std::string& path, const Model& model, std::string_view metadata = {});
struct Checkpoint {
  Model model;
  std::string metadata;
};
/// Throws std::runtime_error on bad magic, version, fingerprint or truncation.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace augat::nn
