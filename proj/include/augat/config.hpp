#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augat/advtrain.hpp"
#include "augat/calibration.hpp"
#include "augat/dataset_io.hpp"
#include "augat/idbh.hpp"
#include "augat/nn.hpp"
#include "augat/transforms.hpp"

namespace augat::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

/// Invalid or inconsistent configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a of the canonical (key-sorted, compact) JSON dump, as 16 hex digits.
std::string config_hash(const json& config);

struct Provenance {
  std::uint64_t seed = 0;
  std::string configHash;
  std::string toolVersion = kToolVersion;

  json to_json() const;
  /// Single line "seed=... configHash=... toolVersion=...".
  std::string line() const;
};

/// Accepts a number or a fraction string such as "8/255".
double number(const json& j, const char* what);

// ---- per-type conversions -------------------------------------------------------

json to_json(const AttackConfig& cfg);
AttackConfig attack_from_json(const json& j, AttackConfig defaults = {});

json to_json(const TransformParams& p);
TransformParams params_from_json(const json& j);
json to_json(const IdbhTrace& trace);
IdbhTrace trace_from_json(const json& j);

json to_json(const ColorShapeLayer& layer);
ColorShapeLayer color_shape_from_json(const json& j);
json to_json(const IdbhSchedule& schedule);
IdbhSchedule schedule_from_json(const json& j, int channels);

json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const json& j);

TransformSpec transform_spec_from_json(const json& j, int channels);

json to_json(const GridResult& r);
GridResult grid_result_from_json(const json& j);

// ---- run configuration ------------------------------------------------------------

struct DataConfig {
  enum class Source { Synthetic, Cifar, Png } source = Source::Synthetic;
  SyntheticSpec synthetic;
  std::size_t trainCount = 2000;
  std::size_t testCount = 1000;
  std::vector<std::filesystem::path> train;
  std::vector<std::filesystem::path> test;
  /// Keep only these original labels, relabelled 0..n-1 in this order.
  std::vector<int> classes;
  std::size_t limitTrain = 0;
  std::size_t limitTest = 0;
};

struct LoadedData {
  Dataset train;
  Dataset test;
};

/// Throws DataError for unreadable or malformed files.
LoadedData load_data(const DataConfig& cfg);

enum class AugmentationType { None, Idbh, Transform, Calibrated };

struct AugmentationConfig {
  AugmentationType type = AugmentationType::None;
  IdbhSchedule schedule;
  TransformSpec transform;
  TransformKind calibratedKind = TransformKind::Identity;
  int calibratedDegree = 0;
};

/// Settings shared by all subcommands. Command-specific blocks stay in `raw`.
struct RunConfig {
  json raw;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path output;
  DataConfig data;
  std::string modelLayers;
  nn::OptimizerState optimizer;
  TrainConfig train;
  AttackConfig evalAttack;
  AugmentationConfig augmentation;
  std::optional<std::filesystem::path> calibrationFile;
  std::optional<std::filesystem::path> checkpoint;

  /// `raw` without the output location; this is what gets hashed and
  /// recorded, so reruns into different directories compare equal.
  json experiment() const;
  Provenance provenance() const;
  /// Channel count of the configured images.
  int channels() const;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output;
  std::optional<int> epochs;
  std::optional<std::string> checkpoint;
};

/// Validates everything (including that referenced input paths exist) and
/// throws ConfigError before any side effect.
RunConfig parse_run_config(json config, const Overrides& overrides = {});
json load_json_file(const std::filesystem::path& path);

nn::ModelSpec model_spec(const RunConfig& cfg, const Dataset& data);
nn::Model initial_model(const RunConfig& cfg, const Dataset& data);

/// Builds the configured per-image augmentation. Fixed placements are
/// resolved here from the run seed.
Augmentation make_augmentation(const AugmentationConfig& aug, const RunConfig& cfg, int height, int width,
                               const CalibrationTable* calibration);

}  // namespace augat::cli
