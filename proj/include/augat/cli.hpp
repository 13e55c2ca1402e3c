#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "augat/config.hpp"

namespace augat::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitDivergence = 3 };

// ---- augment ----------------------------------------------------------------------

/// Writes aug_NNNNN.png for every input plus manifest.json with the sampled
/// layer decisions of each image.
int cmd_augment(const RunConfig& cfg, std::ostream& log);
/// Re-applies the traces of `manifest` to the original inputs.
int cmd_augment_replay(const std::filesystem::path& manifest, const std::filesystem::path& outDir, std::ostream& log);

// ---- hardness calibration ------------------------------------------------------------

/// Robust accuracy of the base model on test data transformed by `kind` at `strength`.
using RobustnessProbe = std::function<double(TransformKind kind, double strength)>;

struct CalibrationRequest {
  std::vector<TransformKind> kinds;
  /// Nominal hardness per degree; the target robustness is base / hardness.
  std::vector<double> hardness{kHardnessDegrees.begin(), kHardnessDegrees.end()};
  double tolerance = 0.005;
  int maxIterations = 19;
};

struct CalibrationEntry {
  TransformKind kind = TransformKind::Identity;
  int degree = 0;
  double nominalHardness = 0.0;
  StrengthSearchResult search;
};

struct CalibrationOutcome {
  double baseRobustness = 0.0;
  std::vector<CalibrationEntry> entries;
  CalibrationTable table;
};

/// Strength interval searched for a kind: from the identity strength towards
/// the destructive end, capped by the image size for pixel-valued kinds.
StrengthBounds calibration_interval(TransformKind kind, int height, int width);

CalibrationOutcome calibrate_hardness(const CalibrationRequest& request, double baseRobustness,
                                      const RobustnessProbe& probe, int height, int width);
void write_calibration(const std::filesystem::path& path, const CalibrationOutcome& outcome,
                       const Provenance& provenance);
int cmd_calibrate_hardness(const RunConfig& cfg, std::ostream& log);

// ---- training and evaluation ------------------------------------------------------------

struct TrainOutcome {
  TrainResult result;
  /// Best and end models under the final evaluation attack.
  EvalResult bestEval;
  EvalResult endEval;
};

/// Adversarial training from the seeded initial model.
TrainOutcome run_training(const RunConfig& cfg, const LoadedData& data, const Augmentation& augmentation,
                          bool finalEval, std::ostream* log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);

// ---- grid search ---------------------------------------------------------------------

std::unique_ptr<PruningPolicy> make_pruning(const json& j);

/// Resumable search: completed schedules are appended to
/// `<output>/progress.jsonl` and skipped on the next run.
std::vector<GridResult> run_grid_search(const RunConfig& cfg, const SearchSpace& space,
                                        const ScheduleEvaluator& evaluator, const PruningPolicy& pruning,
                                        std::ostream& log);
void write_grid_csv(const std::filesystem::path& path, const std::vector<GridResult>& results,
                    const Provenance& provenance);
int cmd_grid_search(const RunConfig& cfg, std::ostream& log);

// ---- diversity sweeps ------------------------------------------------------------------

using Trainer = std::function<TrainReport(const Augmentation&)>;

struct SweepRow {
  std::string protocol;
  std::string variant;
  TrainReport report;
};

/// Protocols: type (pool sizes), spatial (random vs fixed placement), strength
/// (degree ranges) and hardness (single degrees).
std::vector<SweepRow> run_diversity_sweep(const RunConfig& cfg, const Trainer& trainer, int height, int width,
                                          const CalibrationTable* calibration);
int cmd_sweep_diversity(const RunConfig& cfg, std::ostream& log);

// ---- report ----------------------------------------------------------------------------

/// Summarises train reports, sweep and grid outputs as CSV.
int cmd_report(const std::vector<std::filesystem::path>& inputs, const std::optional<std::filesystem::path>& out,
               std::ostream& log);

/// Full command line, exit code per ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace augat::cli
