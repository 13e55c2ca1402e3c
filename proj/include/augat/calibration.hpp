#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "augat/transforms.hpp"

namespace augat {

/// The seven nominal hardness degrees (index 1..7).
inline constexpr std::array<double, 7> kHardnessDegrees{1.04, 1.17, 1.34, 1.56, 1.87, 2.34, 3.12};

/// Reference PGD50 robustness of the unaugmented base model and the target
/// robustness on augmented data for each degree.
inline constexpr double kReferenceBaseRobustness = 0.4693;
inline constexpr std::array<double, 7> kReferenceTargetRobustness{0.45, 0.40, 0.35, 0.30, 0.25, 0.20, 0.15};

/// base / target truncated to two decimals, which is how the degree table is
/// tabulated (46.93 / 25 = 1.877 is listed as 1.87).
std::vector<double> nominal_hardness_degrees(double baseRobustness, const std::vector<double>& targets);

struct CalibrationLevel {
  int degree = 0;  // 1..7
  double hardness = 0.0;
  double strength = 0.0;
  std::optional<double> achievedRobustness;
};

/// Strength of one transform kind at each hardness degree.
/// Invariant: hardness strictly increases with degree.
struct HardnessCalibration {
  TransformKind kind = TransformKind::Identity;
  std::vector<CalibrationLevel> levels;

  void validate() const;
  const CalibrationLevel* find(int degree) const;
};

/// Calibrations for many kinds, as loaded from a calibration file.
class CalibrationTable {
 public:
  void set(TransformKind kind, CalibrationLevel level);
  /// Throws std::out_of_range if the kind has no entry.
  const HardnessCalibration& at(TransformKind kind) const;
  bool contains(TransformKind kind) const { return entries_.count(kind) != 0; }
  const std::map<TransformKind, HardnessCalibration>& entries() const { return entries_; }

  /// Plain-text format, one entry per line:
  ///   <Kind>.<degree> = <strength>
  /// optionally followed by `hardness=<h>` and `achieved=<r>` fields.
  /// '#' starts a comment. Missing hardness defaults to the nominal degree value.
  static CalibrationTable parse(std::istream& in);
  static CalibrationTable load(const std::string& path);
  void write(std::ostream& out) const;

 private:
  std::map<TransformKind, HardnessCalibration> entries_;
};

/// Spec at the calibrated strength of `degree`. Throws std::out_of_range when
/// the degree is outside 1..7 or not calibrated.
TransformSpec calibrated_spec(TransformKind kind, int degree, const HardnessCalibration& calibration);

/// Result of searching one strength for one target robustness.
struct StrengthSearchResult {
  double target = 0.0;
  double strength = 0.0;
  double achieved = 0.0;
  int iterations = 0;
  bool reachable = false;
};

/// Bisection for a strength whose robustness is within `tolerance` of
/// `target`, assuming robustness is monotone in strength (either direction).
/// `iterations` counts midpoint evaluations, capped at `maxIterations`.
/// For integral kinds set `integral` so only whole strengths are probed.
StrengthSearchResult search_strength(const std::function<double(double)>& robustnessAt, double lo, double hi,
                                     double target, double tolerance, int maxIterations, bool integral = false);

}  // namespace augat
