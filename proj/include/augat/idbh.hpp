#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "augat/calibration.hpp"
#include "augat/cropshift.hpp"
#include "augat/image.hpp"
#include "augat/rng.hpp"
#include "augat/transforms.hpp"

namespace augat {

struct RangeI {
  int lo = 0;
  int hi = 0;
  bool operator==(const RangeI&) const = default;
};

enum class LayerBias { ColorBiased, ShapeBiased, Custom };

std::string_view to_string(LayerBias bias);
LayerBias parse_layer_bias(std::string_view name);

struct ColorShapeEntry {
  TransformKind kind = TransformKind::Identity;
  double weight = 1.0;
  RangeD strength;
  bool operator==(const ColorShapeEntry&) const = default;
};

/// Picks one transform by weight, then a strength uniformly from its range.
struct ColorShapeLayer {
  std::vector<ColorShapeEntry> entries;
  LayerBias bias = LayerBias::Custom;

  /// Color transforms get twice the selection weight; Shear/Rotate use a
  /// small strength range. Placeholder values pending calibration.
  static ColorShapeLayer color_biased();
  /// Shape transforms get twice the selection weight; Shear/Rotate use a
  /// moderate strength range. Placeholder values pending calibration.
  static ColorShapeLayer shape_biased();

  void validate() const;
  bool operator==(const ColorShapeLayer&) const = default;
};

/// Four-layer schedule: flip -> crop (Cropshift) -> color/shape -> dropout
/// (Random Erasing). Each layer fires independently with its probability.
struct IdbhSchedule {
  double pFlip = 0.5;
  double pCrop = 0.0;
  RangeI cropStrength{0, 0};
  double pColorShape = 0.0;
  ColorShapeLayer colorShape;
  double pDropout = 0.0;
  RangeD dropoutArea{0.02, 0.33};
  RangeD dropoutAspect{0.3, 3.3};
  Fill fill;
  EraseFill eraseFill = EraseFill::Noise;
  Interp interp = Interp::Nearest;

  /// Throws std::invalid_argument. Pass the image size to also check the
  /// crop range against min(H, W) - 1.
  void validate(int height = 0, int width = 0) const;
  bool operator==(const IdbhSchedule&) const = default;
};

/// Decisions taken by one apply_idbh call; enough to replay it exactly.
struct IdbhTrace {
  bool flipped = false;
  std::optional<CropshiftParams> crop;
  std::optional<TransformParams> colorShape;
  std::optional<TransformParams> dropout;
  bool operator==(const IdbhTrace&) const = default;
};

Image apply_idbh(const IdbhSchedule& schedule, const Image& img, RngStream& rng, IdbhTrace* trace = nullptr);
Image replay_idbh(const IdbhTrace& trace, const Image& img, std::span<const float> fill);

/// Per-image augmentation: image + its own random stream -> augmented image.
using Augmentation = std::function<Image(const Image&, RngStream&)>;
/// Per-image spec sampler used by the diversity protocols.
using SpecSampler = std::function<TransformSpec(RngStream&)>;

Augmentation idbh_augmentation(IdbhSchedule schedule);
Augmentation spec_augmentation(SpecSampler sampler);
Augmentation identity_augmentation();

// ---- search space -----------------------------------------------------------

struct CropCombo {
  RangeI strength;
  double probability = 0.0;
  bool operator==(const CropCombo&) const = default;
};

struct DropoutCombo {
  RangeD area;
  double probability = 0.0;
  bool operator==(const DropoutCombo&) const = default;
};

struct SearchSpace {
  double pFlip = 0.5;
  double pColorShape = 1.0;
  std::vector<CropCombo> crop;
  std::vector<ColorShapeLayer> colorShape;
  std::vector<DropoutCombo> dropout;
  RangeD dropoutAspect{0.3, 3.3};

  /// 8 crop combos x {ColorBiased, ShapeBiased} x 5 dropout combos.
  static SearchSpace reduced_default();
  std::size_t cardinality() const { return crop.size() * colorShape.size() * dropout.size(); }
};

/// Position of a schedule inside its search space.
struct ScheduleCoordinate {
  int id = 0;
  int cropIndex = 0;
  int versionIndex = 0;
  int dropoutIndex = 0;
};

/// Deterministic order: crop index major, version, dropout index minor.
std::vector<IdbhSchedule> enumerate_search_space(const SearchSpace& space);
std::vector<ScheduleCoordinate> enumerate_coordinates(const SearchSpace& space);
IdbhSchedule schedule_at(const SearchSpace& space, const ScheduleCoordinate& coord);

/// Component-wise hardness order: a combo is at least as hard as another
/// when its strength upper bound and probability are both no smaller.
bool at_least_as_hard(const CropCombo& a, const CropCombo& b);
bool at_least_as_hard(const DropoutCombo& a, const DropoutCombo& b);
/// Same color/shape version and at least as hard in crop and dropout, with at
/// least one of them strictly harder.
bool strictly_harder(const SearchSpace& space, const ScheduleCoordinate& a, const ScheduleCoordinate& b);
/// Number of crop combos strictly easier than this one plus the same for dropout.
int hardness_index(const SearchSpace& space, const ScheduleCoordinate& coord);

// ---- grid search ------------------------------------------------------------

struct RobustnessScore {
  double bestRobustness = 0.0;
  double endRobustness = 0.0;
  double bestAccuracy = 0.0;
  double endAccuracy = 0.0;
};

enum class EvalStatus { Evaluated, Skipped, Failed };
std::string_view to_string(EvalStatus status);

struct GridResult {
  ScheduleCoordinate coord;
  EvalStatus status = EvalStatus::Evaluated;
  std::optional<RobustnessScore> score;
  /// For skipped schedules: the evaluated schedule that justified the skip.
  int dominatingId = -1;
  std::string note;
};

struct SkipDecision {
  int dominatingId = -1;
  std::string reason;
};

class PruningPolicy {
 public:
  virtual ~PruningPolicy() = default;
  /// Evaluation order over the candidates (default: enumeration order).
  virtual std::vector<ScheduleCoordinate> order(const SearchSpace& space,
                                                std::vector<ScheduleCoordinate> candidates) const;
  virtual std::optional<SkipDecision> should_skip(const SearchSpace& space, const ScheduleCoordinate& candidate,
                                                  const std::vector<GridResult>& completed) const = 0;
};

class NoPruning final : public PruningPolicy {
 public:
  std::optional<SkipDecision> should_skip(const SearchSpace&, const ScheduleCoordinate&,
                                          const std::vector<GridResult>&) const override {
    return std::nullopt;
  }
};

/// Skips a schedule that is strictly harder than an evaluated schedule whose
/// end accuracy fell more than `margin` below the incumbent's end accuracy
/// (incumbent = highest best robustness so far).
class DominancePruning final : public PruningPolicy {
 public:
  explicit DominancePruning(double margin = 0.05) : margin_(margin) {}
  std::vector<ScheduleCoordinate> order(const SearchSpace& space,
                                        std::vector<ScheduleCoordinate> candidates) const override;
  std::optional<SkipDecision> should_skip(const SearchSpace& space, const ScheduleCoordinate& candidate,
                                          const std::vector<GridResult>& completed) const override;

 private:
  double margin_;
};

/// Evaluates in increasing hardness_index order. After `patience`
/// consecutive drops in best robustness, every schedule with a larger
/// hardness index than the last evaluated one is skipped.
class ConsecutiveDropPruning final : public PruningPolicy {
 public:
  explicit ConsecutiveDropPruning(int patience = 2) : patience_(patience) {}
  std::vector<ScheduleCoordinate> order(const SearchSpace& space,
                                        std::vector<ScheduleCoordinate> candidates) const override;
  std::optional<SkipDecision> should_skip(const SearchSpace& space, const ScheduleCoordinate& candidate,
                                          const std::vector<GridResult>& completed) const override;

 private:
  int patience_;
};

using ScheduleEvaluator = std::function<RobustnessScore(const ScheduleCoordinate&, const IdbhSchedule&)>;

struct GridSearchOptions {
  /// Results from an interrupted run; these schedules are not re-evaluated.
  std::vector<GridResult> resumed;
  /// Called after every newly completed schedule (checkpoint hook).
  std::function<void(const GridResult&)> onResult;
};

/// Evaluated schedules sorted by best robustness (descending), followed by
/// skipped and failed ones in id order. An evaluator exception marks that
/// schedule failed and the search continues.
std::vector<GridResult> grid_search(const SearchSpace& space, const ScheduleEvaluator& evaluator,
                                    const PruningPolicy& pruning, const GridSearchOptions& options = {});

// ---- diversity protocols ------------------------------------------------------

/// Draws `poolSize` distinct kinds once (uniformly, from `kinds`), then picks
/// one of them uniformly per image at the calibrated strength of `degree`.
/// poolSize 0 yields the identity. Cutout and Cropshift are not allowed.
SpecSampler type_diversity_pool(const std::vector<TransformKind>& kinds, int degree, int poolSize,
                                const CalibrationTable& calibration, RngStream& rng);

/// Per image, a degree uniform over `degrees`, mapped through calibrated_spec.
/// Throws std::out_of_range up front if any degree is not calibrated.
SpecSampler strength_diversity_sampler(TransformKind kind, const std::vector<int>& degrees,
                                       const HardnessCalibration& calibration);

/// The four strength-diversity ranges {4}, {3..5}, {2..6}, {1..7}.
std::vector<std::vector<int>> strength_diversity_ranges();

}  // namespace augat
