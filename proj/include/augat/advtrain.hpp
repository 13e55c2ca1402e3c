#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augat/idbh.hpp"
#include "augat/image.hpp"
#include "augat/nn.hpp"
#include "augat/rng.hpp"

namespace augat {

enum class AttackInit { Zero, RandomUniform };

std::string_view to_string(AttackInit init);
AttackInit parse_attack_init(std::string_view name);

/// L-infinity PGD. Budgets are in pixel units of the [0,1] range.
struct AttackConfig {
  double epsilon = 8.0 / 255.0;
  double stepSize = 2.0 / 255.0;
  int steps = 10;
  int restarts = 1;
  AttackInit init = AttackInit::RandomUniform;
  /// Return the strongest iterate seen instead of the last one.
  bool keepBest = true;

  static AttackConfig pgd(int steps, int restarts = 1);
  void validate() const;
  bool operator==(const AttackConfig&) const = default;
};

/// Adversarial copies of `batch`. Example i draws from rng.split(firstId + i),
/// so results do not depend on how a dataset is cut into batches. Candidates
/// (iterates, restarts) are ranked by misclassification first, then loss.
std::vector<Image> pgd_attack(const nn::Model& model, std::span<const Image> batch, std::span<const int> labels,
                              const AttackConfig& cfg, const RngStream& rng, std::uint64_t firstId = 0,
                              int threads = 1);

struct EvalResult {
  double cleanAccuracy = 0.0;
  double robustAccuracy = 0.0;
  std::size_t count = 0;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t batchSize = 256;
  /// Restrict to these indices; empty means the whole dataset.
  std::vector<std::size_t> subset;
};

/// Clean and robust accuracy. Throws std::invalid_argument on an empty set.
EvalResult evaluate(const nn::Model& model, const Dataset& data, const AttackConfig& cfg, const EvalOptions& opts = {});
double evaluate_robustness(const nn::Model& model, const Dataset& data, const AttackConfig& cfg,
                           const EvalOptions& opts = {});
double clean_accuracy(const nn::Model& model, const Dataset& data);

/// Applies `augmentation` once to every image; image i uses its own stream
/// derived from `seed`.
Dataset augment_dataset(const Dataset& data, const Augmentation& augmentation, std::uint64_t seed);

struct HardnessReport {
  double baseRobustness = 0.0;
  double augmentedRobustness = 0.0;
  double hardness = 0.0;
  /// Set when the augmented robustness is zero; hardness is then +inf.
  bool infinite = false;
};

HardnessReport hardness_from(double baseRobustness, double augmentedRobustness);
HardnessReport measure_hardness(const nn::Model& model, const Dataset& testData, const Augmentation& augmentation,
                                const AttackConfig& cfg, const EvalOptions& opts = {});

/// targetEps * min(1, (epoch + 1) / warmupEpochs).
double epsilon_warmup(int epoch, int warmupEpochs, double targetEps);

struct EpochRecord {
  int epoch = 0;
  double learningRate = 0.0;
  double epsilon = 0.0;
  double trainLoss = 0.0;
  double cleanAccuracy = 0.0;
  double robustAccuracy = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int bestEpoch = -1;
  double bestRobustness = 0.0;
  double endRobustness = 0.0;
  double bestAccuracy = 0.0;
  double endAccuracy = 0.0;
  double gap = 0.0;
  bool averaged = false;
  /// Test indices used for per-epoch tracking (empty: full test set).
  std::vector<std::size_t> trackSubset;

  /// Recomputes the best/end summary from `epochs`.
  void summarize();
  nlohmann::json to_json() const;
  static TrainReport from_json(const nlohmann::json& j);
  static std::string csv_header();
  std::string csv_row() const;
  bool operator==(const TrainReport&) const = default;
};

struct TrainConfig {
  int epochs = 0;
  std::size_t batchSize = 128;
  /// Chance that an image is augmented before the attack.
  double applyProbability = 1.0;
  AttackConfig trainAttack = AttackConfig::pgd(10);
  AttackConfig trackAttack = AttackConfig::pgd(10);
  /// Linear epsilon ramp over this many epochs; 0 disables it.
  int warmupEpochs = 0;
  /// Average weights from this epoch on and track the average.
  std::optional<int> swaStart;
  /// Number of test images tracked each epoch; 0 means all.
  std::size_t trackSize = 0;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(int epoch, std::size_t batch, double loss);
  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

struct TrainResult {
  nn::Model finalModel;
  nn::Model bestModel;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// PGD adversarial training. Throws TrainingDivergence on a non-finite loss.
TrainResult adversarial_train(nn::Model model, const Dataset& trainData, const Dataset& testData,
                              const Augmentation& augmentation, nn::OptimizerState opt, const TrainConfig& cfg,
                              const EpochCallback& onEpoch = {});

}  // namespace augat
