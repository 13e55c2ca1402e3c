#include "augat/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>

namespace augat::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kAugmentStream = 0x4155;
constexpr std::uint64_t kPoolStream = 0x504F4F4C;
constexpr std::uint64_t kPlacementStream = 0x504C4143;

const json* find(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

const json& block(const RunConfig& cfg, const char* key) {
  static const json empty = json::object();
  const json* b = find(cfg.raw, key);
  if (b && !b->is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return b ? *b : empty;
}

int get_int(const json& j, const char* key, int fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
  return v->get<int>();
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return json(v).dump();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json eval_json(const EvalResult& r) {
  return {{"cleanAccuracy", r.cleanAccuracy}, {"robustAccuracy", r.robustAccuracy}, {"count", r.count}};
}

json hardness_json(const HardnessReport& h) {
  json j{{"baseRobustness", h.baseRobustness}, {"augmentedRobustness", h.augmentedRobustness},
         {"infinite", h.infinite}};
  j["hardness"] = h.infinite ? json("inf") : json(h.hardness);
  return j;
}

EvalOptions eval_options(const RunConfig& cfg) {
  EvalOptions o;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  return o;
}

std::optional<CalibrationTable> load_calibration(const RunConfig& cfg) {
  if (!cfg.calibrationFile) return std::nullopt;
  try {
    return CalibrationTable::load(cfg.calibrationFile->string());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("calibration file: " + std::string(e.what()));
  }
}

nn::Model load_model(const RunConfig& cfg, const Dataset& data) {
  if (!cfg.checkpoint) throw ConfigError("a checkpoint is required (--checkpoint or 'checkpoint')");
  std::optional<nn::Checkpoint> ck;
  try {
    ck = nn::load_checkpoint(cfg.checkpoint->string());
  } catch (const std::runtime_error& e) {
    throw DataError("checkpoint " + cfg.checkpoint->string() + ": " + e.what());
  }
  const auto& s = ck->model.spec();
  const Image& first = data.images.front();
  if (s.height != first.height() || s.width != first.width() || s.channels != first.channels() ||
      s.classCount != data.classCount)
    throw DataError("checkpoint architecture does not match the configured data");
  return std::move(ck->model);
}

std::pair<int, int> image_size(const Dataset& d) {
  if (d.empty()) throw DataError("empty dataset");
  return {d.images.front().height(), d.images.front().width()};
}

// ---- augment helpers ------------------------------------------------------------------

struct AugmentInput {
  std::string source;
  std::optional<Image> image;
  std::string error;
};

std::vector<fs::path> png_files(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_directory(p)) {
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(p);
  }
  return out;
}

/// Inputs named by `augment.input` (file or directory) or the first
/// `augment.count` test images of the configured data.
std::vector<AugmentInput> gather_inputs(const RunConfig& cfg, const json& aug) {
  std::vector<AugmentInput> inputs;
  if (const json* in = find(aug, "input")) {
    for (const auto& p : png_files(in->get<std::string>())) {
      AugmentInput a{p.string(), std::nullopt, {}};
      try {
        a.image = load_png(p);
      } catch (const std::exception& e) {
        a.error = e.what();
      }
      inputs.push_back(std::move(a));
    }
    return inputs;
  }
  const Dataset test = load_data(cfg.data).test;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(get_int(aug, "count", 16)), test.size());
  for (std::size_t i = 0; i < count; ++i) inputs.push_back({"test:" + std::to_string(i), test.images[i], {}});
  return inputs;
}

IdbhSchedule augment_schedule(const RunConfig& cfg) {
  switch (cfg.augmentation.type) {
    case AugmentationType::Idbh:
      return cfg.augmentation.schedule;
    case AugmentationType::None: {
      IdbhSchedule s;
      s.pFlip = 0.0;
      return s;
    }
    default:
      throw ConfigError("augment needs an 'idbh' or 'none' augmentation");
  }
}

std::string aug_name(std::size_t i) {
  std::ostringstream os;
  os << "aug_" << std::setw(5) << std::setfill('0') << i << ".png";
  return os.str();
}

}  // namespace

// ---- augment ----------------------------------------------------------------------------

int cmd_augment(const RunConfig& cfg, std::ostream& log) {
  const json& aug = block(cfg, "augment");
  IdbhSchedule schedule = augment_schedule(cfg);
  if (const json* in = find(aug, "input")) {
    if (!in->is_string()) throw ConfigError("augment.input must be a path");
    if (!fs::exists(in->get<std::string>())) throw ConfigError("augment.input does not exist: " + in->get<std::string>());
  }
  const Provenance prov = cfg.provenance();
  std::vector<AugmentInput> inputs = gather_inputs(cfg, aug);
  if (inputs.empty()) throw DataError("no input images");
  ensure_dir(cfg.output);

  json images = json::array();
  std::size_t failures = 0;
  const RngStream root(cfg.seed, kAugmentStream);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    json entry{{"index", i}, {"input", inputs[i].source}};
    try {
      if (!inputs[i].image) throw DataError(inputs[i].error);
      const Image& img = *inputs[i].image;
      IdbhSchedule s = schedule;
      if (s.fill.empty()) s.fill = uniform_fill(img.channels());
      s.validate(img.height(), img.width());
      RngStream rng = root.split(i);
      IdbhTrace trace;
      const Image out = apply_idbh(s, img, rng, &trace);
      write_png(cfg.output / aug_name(i), out, prov.line());
      entry["output"] = aug_name(i);
      entry["trace"] = to_json(trace);
    } catch (const std::exception& e) {
      ++failures;
      entry["error"] = e.what();
      log << "augment: " << inputs[i].source << ": " << e.what() << "\n";
    }
    images.push_back(std::move(entry));
  }
  json manifest{{"provenance", prov.to_json()}, {"config", cfg.experiment()},
                {"schedule", to_json(schedule)}, {"images", std::move(images)}};
  write_json(cfg.output / "manifest.json", manifest);
  log << "augment: wrote " << inputs.size() - failures << " of " << inputs.size() << " images to "
      << cfg.output.string() << "\n";
  return failures == inputs.size() ? kExitData : kExitOk;
}

int cmd_augment_replay(const fs::path& manifestPath, const fs::path& outDir, std::ostream& log) {
  json manifest;
  {
    std::ifstream in(manifestPath);
    if (!in) throw ConfigError("cannot open manifest " + manifestPath.string());
    try {
      manifest = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DataError("manifest: " + std::string(e.what()));
    }
  }
  const RunConfig cfg = parse_run_config(manifest.at("config"));
  const json& images = manifest.at("images");
  std::optional<Dataset> test;
  ensure_dir(outDir);
  std::size_t written = 0, failures = 0;
  for (const auto& entry : images) {
    if (!entry.contains("trace")) continue;
    const std::string source = entry.at("input").get<std::string>();
    try {
      Image img;
      if (source.rfind("test:", 0) == 0) {
        if (!test) test = load_data(cfg.data).test;
        img = test->images.at(std::stoul(source.substr(5)));
      } else {
        img = load_png(source);
      }
      Fill fill = cfg.augmentation.type == AugmentationType::Idbh ? cfg.augmentation.schedule.fill : Fill{};
      if (fill.empty()) fill = uniform_fill(img.channels());
      const Image out = replay_idbh(trace_from_json(entry.at("trace")), img, fill);
      write_png(outDir / entry.at("output").get<std::string>(), out, cfg.provenance().line());
      ++written;
    } catch (const std::exception& e) {
      ++failures;
      log << "replay: " << source << ": " << e.what() << "\n";
    }
  }
  log << "replay: wrote " << written << " images to " << outDir.string() << "\n";
  return written == 0 && failures > 0 ? kExitData : kExitOk;
}

// ---- hardness calibration ----------------------------------------------------------------

StrengthBounds calibration_interval(TransformKind kind, int height, int width) {
  switch (kind) {
    case TransformKind::Color:
    case TransformKind::Sharpness:
      return {0.0, 1.0};
    case TransformKind::Brightness:
    case TransformKind::Contrast:
      return {0.5, 1.0};
    case TransformKind::TranslateX:
      return {0.0, static_cast<double>(width)};
    case TransformKind::TranslateY:
      return {0.0, static_cast<double>(height)};
    case TransformKind::Padcrop:
    case TransformKind::Cutout:
      return {0.0, static_cast<double>(std::min(height, width))};
    case TransformKind::Cropshift:
      return {0.0, static_cast<double>(std::min(height, width) - 1)};
    case TransformKind::RandomErasing:
      return {0.01, 1.0};
    default:
      if (!uses_strength(kind)) return {0.0, 0.0};
      return strength_bounds(kind);
  }
}

CalibrationOutcome calibrate_hardness(const CalibrationRequest& request, double baseRobustness,
                                      const RobustnessProbe& probe, int height, int width) {
  CalibrationOutcome outcome;
  outcome.baseRobustness = baseRobustness;
  for (TransformKind kind : request.kinds) {
    if (!uses_strength(kind)) throw ConfigError(std::string(to_string(kind)) + " has no strength to calibrate");
    const StrengthBounds range = calibration_interval(kind, height, width);
    const bool integral =
        kind == TransformKind::Padcrop || kind == TransformKind::Cutout || kind == TransformKind::Cropshift;
    std::map<double, double> cache;
    auto cached = [&](double s) {
      auto it = cache.find(s);
      if (it == cache.end()) it = cache.emplace(s, probe(kind, s)).first;
      return it->second;
    };
    double lastHardness = 0.0;
    for (std::size_t d = 0; d < request.hardness.size(); ++d) {
      CalibrationEntry e;
      e.kind = kind;
      e.degree = static_cast<int>(d) + 1;
      e.nominalHardness = request.hardness[d];
      const double target = baseRobustness / e.nominalHardness;
      e.search = search_strength(cached, range.lo, range.hi, target, request.tolerance, request.maxIterations,
                                 integral);
      if (e.search.reachable) {
        CalibrationLevel level;
        level.degree = e.degree;
        level.hardness = e.search.achieved > 0.0 ? baseRobustness / e.search.achieved : e.nominalHardness;
        level.strength = e.search.strength;
        level.achievedRobustness = e.search.achieved;
        // Neighbouring targets inside the tolerance can land on the same
        // strength; keep only degrees whose hardness still increases.
        if (level.hardness > lastHardness) {
          outcome.table.set(kind, level);
          lastHardness = level.hardness;
        } else {
          e.search.reachable = false;
        }
      }
      outcome.entries.push_back(e);
    }
  }
  return outcome;
}

void write_calibration(const fs::path& path, const CalibrationOutcome& outcome, const Provenance& provenance) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# " << provenance.line() << "\n";
  os << "# baseRobustness=" << outcome.baseRobustness << "\n";
  for (const auto& e : outcome.entries) {
    const std::string key = std::string(to_string(e.kind)) + "." + std::to_string(e.degree);
    if (e.search.reachable) {
      const auto* level = outcome.table.at(e.kind).find(e.degree);
      os << key << " = " << level->strength << " hardness=" << level->hardness
         << " achieved=" << e.search.achieved << "\n";
    } else {
      os << "# " << key << " unreachable: target=" << e.search.target << " closestStrength=" << e.search.strength
         << " achieved=" << e.search.achieved << "\n";
    }
  }
  write_text(path, os.str());
}

int cmd_calibrate_hardness(const RunConfig& cfg, std::ostream& log) {
  const json& cb = block(cfg, "calibrate");
  CalibrationRequest req;
  if (const json* k = find(cb, "kinds")) {
    for (const auto& name : *k) {
      try {
        req.kinds.push_back(parse_transform_kind(name.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("calibrate.kinds: ") + e.what());
      }
    }
  } else {
    for (TransformKind k : all_transform_kinds())
      if (uses_strength(k)) req.kinds.push_back(k);
  }
  for (TransformKind k : req.kinds)
    if (!uses_strength(k)) throw ConfigError(std::string(to_string(k)) + " has no strength to calibrate");
  if (const json* h = find(cb, "hardness")) {
    req.hardness.clear();
    for (const auto& v : *h) req.hardness.push_back(number(v, "calibrate.hardness"));
  }
  if (const json* t = find(cb, "tolerance")) req.tolerance = number(*t, "calibrate.tolerance");
  req.maxIterations = get_int(cb, "maxIterations", req.maxIterations);
  if (req.hardness.empty() || !std::is_sorted(req.hardness.begin(), req.hardness.end()) || req.hardness.front() <= 0.0)
    throw ConfigError("calibrate.hardness must be positive and increasing");
  if (!(req.tolerance > 0.0) || req.maxIterations < 1) throw ConfigError("calibrate tolerance/maxIterations invalid");
  if (!cfg.checkpoint) throw ConfigError("calibrate-hardness needs a checkpoint");

  const Dataset test = load_data(cfg.data).test;
  const nn::Model model = load_model(cfg, test);
  const auto [h, w] = image_size(test);
  const EvalOptions opts = eval_options(cfg);
  const double base = evaluate_robustness(model, test, cfg.evalAttack, opts);
  log << "calibrate: base robustness " << base << "\n";
  RobustnessProbe probe = [&](TransformKind kind, double strength) {
    TransformSpec spec;
    spec.kind = kind;
    spec.strength = strength;
    const Dataset aug = augment_dataset(test, spec_augmentation([spec](RngStream&) { return spec; }), cfg.seed);
    const double r = evaluate_robustness(model, aug, cfg.evalAttack, opts);
    log << "calibrate: " << to_string(kind) << " strength " << strength << " robustness " << r << "\n";
    return r;
  };
  const CalibrationOutcome outcome = calibrate_hardness(req, base, probe, h, w);

  ensure_dir(cfg.output);
  const Provenance prov = cfg.provenance();
  write_calibration(cfg.output / "calibration.txt", outcome, prov);
  json entries = json::array();
  for (const auto& e : outcome.entries)
    entries.push_back({{"kind", to_string(e.kind)},
                       {"degree", e.degree},
                       {"nominalHardness", e.nominalHardness},
                       {"target", e.search.target},
                       {"strength", e.search.strength},
                       {"achieved", e.search.achieved},
                       {"iterations", e.search.iterations},
                       {"reachable", e.search.reachable}});
  write_json(cfg.output / "calibration.json",
             {{"provenance", prov.to_json()}, {"baseRobustness", base}, {"entries", entries}});
  return kExitOk;
}

// ---- training and evaluation ------------------------------------------------------------

TrainOutcome run_training(const RunConfig& cfg, const LoadedData& data, const Augmentation& augmentation,
                          bool finalEval, std::ostream* log) {
  nn::Model model = initial_model(cfg, data.train);
  EpochCallback onEpoch;
  if (log)
    onEpoch = [log](const EpochRecord& r) {
      *log << "epoch " << r.epoch << " lr " << r.learningRate << " eps " << r.epsilon << " loss " << r.trainLoss
           << " clean " << r.cleanAccuracy << " robust " << r.robustAccuracy << "\n";
    };
  TrainOutcome out{adversarial_train(std::move(model), data.train, data.test, augmentation, cfg.optimizer, cfg.train,
                                     onEpoch),
                   {},
                   {}};
  if (finalEval) {
    const EvalOptions opts = eval_options(cfg);
    out.bestEval = evaluate(out.result.bestModel, data.test, cfg.evalAttack, opts);
    out.endEval = evaluate(out.result.finalModel, data.test, cfg.evalAttack, opts);
  }
  return out;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  const bool finalEval = block(cfg, "train").value("finalEval", true);
  const std::optional<CalibrationTable> table = load_calibration(cfg);
  const LoadedData data = load_data(cfg.data);
  const auto [h, w] = image_size(data.train);
  const Augmentation aug = make_augmentation(cfg.augmentation, cfg, h, w, table ? &*table : nullptr);
  const Provenance prov = cfg.provenance();
  ensure_dir(cfg.output);

  const TrainOutcome out = run_training(cfg, data, aug, finalEval, &log);
  const TrainReport& rep = out.result.report;

  json report{{"provenance", prov.to_json()}, {"config", cfg.experiment()}, {"report", rep.to_json()}};
  if (finalEval)
    report["final"] = {{"attack", to_json(cfg.evalAttack)},
                       {"best", eval_json(out.bestEval)},
                       {"end", eval_json(out.endEval)}};
  write_json(cfg.output / "report.json", report);
  write_text(cfg.output / "report.csv", "# " + prov.line() + "\n" + TrainReport::csv_header() + "\n" + rep.csv_row() + "\n");

  std::string curve = "# " + prov.line() + "\nepoch,learningRate,epsilon,trainLoss,cleanAccuracy,robustAccuracy\n";
  for (const auto& e : rep.epochs)
    curve += std::to_string(e.epoch) + "," + num(e.learningRate) + "," + num(e.epsilon) + "," + num(e.trainLoss) +
             "," + num(e.cleanAccuracy) + "," + num(e.robustAccuracy) + "\n";
  write_text(cfg.output / "curve.csv", curve);

  json meta = prov.to_json();
  meta["role"] = "best";
  meta["epoch"] = rep.bestEpoch;
  nn::save_checkpoint((cfg.output / "best.ckpt").string(), out.result.bestModel, meta.dump());
  meta["role"] = "end";
  meta["epoch"] = static_cast<int>(rep.epochs.size()) - 1;
  nn::save_checkpoint((cfg.output / "end.ckpt").string(), out.result.finalModel, meta.dump());

  log << "train: best robustness " << rep.bestRobustness << " (epoch " << rep.bestEpoch << "), end "
      << rep.endRobustness << ", gap " << rep.gap << "\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.checkpoint) throw ConfigError("evaluate needs a checkpoint");
  const std::optional<CalibrationTable> table = load_calibration(cfg);
  const Dataset test = load_data(cfg.data).test;
  const nn::Model model = load_model(cfg, test);
  const auto [h, w] = image_size(test);
  const EvalOptions opts = eval_options(cfg);
  const Provenance prov = cfg.provenance();

  const EvalResult r = evaluate(model, test, cfg.evalAttack, opts);
  json result{{"provenance", prov.to_json()},
              {"checkpoint", cfg.checkpoint->string()},
              {"attack", to_json(cfg.evalAttack)},
              {"evaluation", eval_json(r)}};
  if (cfg.augmentation.type != AugmentationType::None) {
    const Augmentation aug = make_augmentation(cfg.augmentation, cfg, h, w, table ? &*table : nullptr);
    const Dataset augmented = augment_dataset(test, aug, cfg.seed);
    result["hardness"] = hardness_json(hardness_from(r.robustAccuracy,
                                                     evaluate_robustness(model, augmented, cfg.evalAttack, opts)));
  }
  ensure_dir(cfg.output);
  write_json(cfg.output / "evaluation.json", result);
  log << "evaluate: clean " << r.cleanAccuracy << " robust " << r.robustAccuracy << " over " << r.count << "\n";
  return kExitOk;
}

// ---- grid search --------------------------------------------------------------------------

std::unique_ptr<PruningPolicy> make_pruning(const json& j) {
  if (j.is_null()) return std::make_unique<NoPruning>();
  if (!j.is_object()) throw ConfigError("'pruning' must be an object");
  const std::string policy = j.value("policy", std::string("none"));
  if (policy == "none") return std::make_unique<NoPruning>();
  if (policy == "dominance") {
    const double margin = j.contains("margin") ? number(j["margin"], "pruning.margin") : 0.05;
    if (!(margin >= 0.0)) throw ConfigError("pruning.margin must be >= 0");
    return std::make_unique<DominancePruning>(margin);
  }
  if (policy == "consecutive") {
    const int patience = get_int(j, "patience", 2);
    if (patience < 1) throw ConfigError("pruning.patience must be >= 1");
    return std::make_unique<ConsecutiveDropPruning>(patience);
  }
  throw ConfigError("pruning.policy must be none, dominance or consecutive");
}

std::vector<GridResult> run_grid_search(const RunConfig& cfg, const SearchSpace& space,
                                        const ScheduleEvaluator& evaluator, const PruningPolicy& pruning,
                                        std::ostream& log) {
  ensure_dir(cfg.output);
  const fs::path progress = cfg.output / "progress.jsonl";
  GridSearchOptions opts;
  if (std::ifstream in(progress); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        opts.resumed.push_back(grid_result_from_json(json::parse(line)));
      } catch (const std::exception&) {
        // A run killed mid-write leaves a partial last line.
        log << "grid: ignoring malformed progress line\n";
      }
    }
  }
  if (!opts.resumed.empty()) log << "grid: resuming with " << opts.resumed.size() << " completed schedules\n";
  // Rewrite the file so a dropped partial line does not precede new records.
  {
    std::string kept;
    for (const auto& r : opts.resumed) kept += to_json(r).dump() + "\n";
    write_text(progress, kept);
  }
  std::ofstream out(progress, std::ios::app);
  opts.onResult = [&](const GridResult& r) {
    out << to_json(r).dump() << "\n";
    out.flush();
    log << "grid: schedule " << r.coord.id << " " << to_string(r.status);
    if (r.score) log << " best " << r.score->bestRobustness << " end " << r.score->endRobustness;
    if (!r.note.empty()) log << " (" << r.note << ")";
    log << "\n";
  };
  return grid_search(space, evaluator, pruning, opts);
}

void write_grid_csv(const fs::path& path, const std::vector<GridResult>& results, const Provenance& provenance) {
  std::string text = "# " + provenance.line() + "\n";
  text += "scheduleId,cropIndex,versionIndex,dropoutIndex,status,bestRobustness,endRobustness,bestAccuracy,"
          "endAccuracy,dominatingId,note\n";
  for (const auto& r : results) {
    text += std::to_string(r.coord.id) + "," + std::to_string(r.coord.cropIndex) + "," +
            std::to_string(r.coord.versionIndex) + "," + std::to_string(r.coord.dropoutIndex) + "," +
            std::string(to_string(r.status)) + ",";
    if (r.score)
      text += num(r.score->bestRobustness) + "," + num(r.score->endRobustness) + "," + num(r.score->bestAccuracy) +
              "," + num(r.score->endAccuracy);
    else
      text += ",,,";
    text += "," + (r.dominatingId >= 0 ? std::to_string(r.dominatingId) : std::string()) + "," + csv_field(r.note) +
            "\n";
  }
  write_text(path, text);
}

int cmd_grid_search(const RunConfig& cfg, std::ostream& log) {
  SearchSpace space = SearchSpace::reduced_default();
  if (const json* s = find(cfg.raw, "searchSpace")) {
    if (!(s->is_string() && s->get<std::string>() == "default")) space = search_space_from_json(*s);
  }
  const json* p = find(cfg.raw, "pruning");
  const std::unique_ptr<PruningPolicy> pruning = make_pruning(p ? *p : json());
  const LoadedData data = load_data(cfg.data);
  const auto [h, w] = image_size(data.train);
  for (const auto& s : enumerate_search_space(space)) {
    try {
      s.validate(h, w);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("search space: ") + e.what());
    }
  }
  const int channels = data.train.images.front().channels();
  ScheduleEvaluator evaluator = [&](const ScheduleCoordinate&, const IdbhSchedule& schedule) {
    IdbhSchedule s = schedule;
    if (s.fill.empty()) s.fill = uniform_fill(channels);
    const TrainReport r = run_training(cfg, data, idbh_augmentation(s), false, nullptr).result.report;
    return RobustnessScore{r.bestRobustness, r.endRobustness, r.bestAccuracy, r.endAccuracy};
  };
  const std::vector<GridResult> results = run_grid_search(cfg, space, evaluator, *pruning, log);
  const Provenance prov = cfg.provenance();
  write_grid_csv(cfg.output / "results.csv", results, prov);
  json arr = json::array();
  for (const auto& r : results) arr.push_back(to_json(r));
  write_json(cfg.output / "results.json",
             {{"provenance", prov.to_json()}, {"searchSpace", to_json(space)}, {"results", arr}});
  return kExitOk;
}

// ---- diversity sweeps -------------------------------------------------------------------------

namespace {

std::string range_label(const std::vector<int>& degrees) {
  if (degrees.size() == 1) return "{" + std::to_string(degrees.front()) + "}";
  return "{" + std::to_string(degrees.front()) + ".." + std::to_string(degrees.back()) + "}";
}

const HardnessCalibration& need(const CalibrationTable* table, TransformKind kind) {
  if (!table || !table->contains(kind))
    throw ConfigError("no calibration for " + std::string(to_string(kind)));
  return table->at(kind);
}

TransformKind kind_of(const json& sweep, const char* key) {
  const json* k = find(sweep, key);
  if (!k || !k->is_string()) throw ConfigError(std::string("sweep.") + key + " is required");
  try {
    return parse_transform_kind(k->get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sweep.") + key + ": " + e.what());
  }
}

Augmentation constant_spec(TransformSpec spec) {
  return spec_augmentation([spec](RngStream&) { return spec; });
}

}  // namespace

std::vector<SweepRow> run_diversity_sweep(const RunConfig& cfg, const Trainer& trainer, int height, int width,
                                          const CalibrationTable* calibration) {
  const json& sweep = block(cfg, "sweep");
  const std::string protocol = sweep.value("protocol", std::string());
  std::vector<std::pair<std::string, Augmentation>> variants;

  if (protocol == "type") {
    std::vector<TransformKind> kinds;
    if (const json* k = find(sweep, "kinds")) {
      for (const auto& n : *k) kinds.push_back(parse_transform_kind(n.get<std::string>()));
    } else if (calibration) {
      for (const auto& [kind, _] : calibration->entries())
        if (kind != TransformKind::Cutout && kind != TransformKind::Cropshift) kinds.push_back(kind);
    }
    if (kinds.empty()) throw ConfigError("type sweep needs calibrated kinds");
    const int degree = get_int(sweep, "degree", 4);
    std::vector<int> sizes;
    if (const json* s = find(sweep, "poolSizes")) {
      sizes = s->get<std::vector<int>>();
    } else {
      for (int m : {0, 1, 2, 4, 8})
        if (m <= static_cast<int>(kinds.size())) sizes.push_back(m);
    }
    if (!calibration) throw ConfigError("type sweep needs a calibration file");
    for (int m : sizes) {
      if (m < 0 || m > static_cast<int>(kinds.size())) throw ConfigError("sweep pool size out of range");
      RngStream rng = RngStream(cfg.seed, kPoolStream).split(static_cast<std::uint64_t>(m));
      try {
        variants.emplace_back("M=" + std::to_string(m),
                              spec_augmentation(type_diversity_pool(kinds, degree, m, *calibration, rng)));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("type sweep: ") + e.what());
      }
    }
  } else if (protocol == "spatial") {
    const int cutout = get_int(sweep, "cutoutSize", 0);
    const int lines = get_int(sweep, "cropLines", 0);
    const int degree = get_int(sweep, "degree", 0);
    auto strength = [&](TransformKind kind, int given) -> double {
      if (given > 0) return given;
      if (degree > 0) return calibrated_spec(kind, degree, need(calibration, kind)).strength;
      throw ConfigError("spatial sweep needs cutoutSize/cropLines or a calibrated degree");
    };
    const int channels = cfg.channels();
    auto fixed = [&](TransformSpec spec, std::uint64_t id) {
      RngStream rng = RngStream(cfg.seed, kPlacementStream).split(id);
      return fix_placement(spec, height, width, channels, rng);
    };
    TransformSpec cut;
    cut.kind = TransformKind::Cutout;
    cut.strength = strength(TransformKind::Cutout, cutout);
    cut.insideOnly = true;
    TransformSpec crop;
    crop.kind = TransformKind::Cropshift;
    crop.strength = strength(TransformKind::Cropshift, lines);
    try {
      validate(cut);
      validate(crop);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("spatial sweep: ") + e.what());
    }
    TransformSpec cutFixed = cut, cropFixed = crop;
    cutFixed.placement = Placement::Fixed;
    cropFixed.placement = Placement::Fixed;
    variants.emplace_back("Cutout-i", constant_spec(cut));
    variants.emplace_back("Cutout-i-1", constant_spec(fixed(cutFixed, 0)));
    variants.emplace_back("Cropshift", constant_spec(crop));
    variants.emplace_back("Cropshift-1", constant_spec(fixed(cropFixed, 1)));
  } else if (protocol == "strength") {
    const TransformKind kind = kind_of(sweep, "kind");
    const HardnessCalibration& cal = need(calibration, kind);
    for (const auto& range : strength_diversity_ranges()) {
      try {
        variants.emplace_back(range_label(range), spec_augmentation(strength_diversity_sampler(kind, range, cal)));
      } catch (const std::out_of_range& e) {
        throw ConfigError(std::string("strength sweep: ") + e.what());
      }
    }
  } else if (protocol == "hardness") {
    const TransformKind kind = kind_of(sweep, "kind");
    const HardnessCalibration& cal = need(calibration, kind);
    std::vector<int> degrees{1, 2, 3, 4, 5, 6, 7};
    if (const json* d = find(sweep, "degrees")) degrees = d->get<std::vector<int>>();
    for (int d : degrees) {
      try {
        variants.emplace_back("degree=" + std::to_string(d), constant_spec(calibrated_spec(kind, d, cal)));
      } catch (const std::out_of_range& e) {
        throw ConfigError(std::string("hardness sweep: ") + e.what());
      }
    }
  } else {
    throw ConfigError("sweep.protocol must be type, spatial, strength or hardness");
  }

  std::vector<SweepRow> rows;
  if (sweep.value("baseline", true)) rows.push_back({protocol, "baseline", trainer(identity_augmentation())});
  for (const auto& [label, aug] : variants) rows.push_back({protocol, label, trainer(aug)});
  return rows;
}

int cmd_sweep_diversity(const RunConfig& cfg, std::ostream& log) {
  const std::optional<CalibrationTable> table = load_calibration(cfg);
  const LoadedData data = load_data(cfg.data);
  const auto [h, w] = image_size(data.train);
  Trainer trainer = [&](const Augmentation& aug) {
    return run_training(cfg, data, aug, false, nullptr).result.report;
  };
  const std::vector<SweepRow> rows = run_diversity_sweep(cfg, trainer, h, w, table ? &*table : nullptr);
  ensure_dir(cfg.output);
  const Provenance prov = cfg.provenance();
  std::string csv = "# " + prov.line() + "\nprotocol,variant," + TrainReport::csv_header() + "\n";
  json arr = json::array();
  for (const auto& r : rows) {
    csv += r.protocol + "," + csv_field(r.variant) + "," + r.report.csv_row() + "\n";
    arr.push_back({{"protocol", r.protocol}, {"variant", r.variant}, {"report", r.report.to_json()}});
    log << "sweep: " << r.variant << " best " << r.report.bestRobustness << " end " << r.report.endRobustness
        << " gap " << r.report.gap << "\n";
  }
  write_text(cfg.output / "sweep.csv", csv);
  write_json(cfg.output / "sweep.json", {{"provenance", prov.to_json()}, {"config", cfg.experiment()}, {"sweep", arr}});
  return kExitOk;
}

// ---- report ---------------------------------------------------------------------------------

int cmd_report(const std::vector<fs::path>& inputs, const std::optional<fs::path>& out, std::ostream& log) {
  if (inputs.empty()) throw ConfigError("report needs at least one input");
  for (const auto& p : inputs)
    if (!fs::exists(p)) throw ConfigError("no such file: " + p.string());
  std::string csv = "source,kind,label,epochs,bestEpoch,bestRobustness,endRobustness,bestAccuracy,endAccuracy,gap,"
                    "gapCheck\n";
  auto row = [&](const fs::path& src, const std::string& kind, const std::string& label, const TrainReport& r) {
    const double gap = r.bestRobustness - r.endRobustness;
    csv += csv_field(src.string()) + "," + kind + "," + csv_field(label) + "," + std::to_string(r.epochs.size()) +
           "," + std::to_string(r.bestEpoch) + "," + num(r.bestRobustness) + "," + num(r.endRobustness) + "," +
           num(r.bestAccuracy) + "," + num(r.endAccuracy) + "," + num(r.gap) + "," +
           (std::abs(gap - r.gap) <= 1e-12 ? "ok" : "mismatch") + "\n";
  };
  for (const auto& p : inputs) {
    json j;
    try {
      std::ifstream in(p);
      j = json::parse(in);
      if (const json* r = find(j, "report")) {
        row(p, "train", "", TrainReport::from_json(*r));
      } else if (const json* s = find(j, "sweep")) {
        for (const auto& e : *s)
          row(p, "sweep:" + e.at("protocol").get<std::string>(), e.at("variant").get<std::string>(),
              TrainReport::from_json(e.at("report")));
      } else if (const json* g = find(j, "results")) {
        for (const auto& e : *g) {
          const GridResult r = grid_result_from_json(e);
          if (!r.score) continue;
          csv += csv_field(p.string()) + ",grid,schedule " + std::to_string(r.coord.id) + ",,," +
                 num(r.score->bestRobustness) + "," + num(r.score->endRobustness) + "," +
                 num(r.score->bestAccuracy) + "," + num(r.score->endAccuracy) + "," +
                 num(r.score->bestRobustness - r.score->endRobustness) + ",\n";
        }
      } else {
        throw DataError("unrecognized report file");
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(p.string() + ": " + e.what());
    }
  }
  if (out) {
    if (out->has_parent_path()) ensure_dir(out->parent_path());
    write_text(*out, csv);
    log << "report: wrote " << out->string() << "\n";
  } else {
    log << csv;
  }
  return kExitOk;
}

// ---- command line -----------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial training with data augmentation"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> output;
    std::optional<int> epochs;
    std::optional<std::string> checkpoint;
    std::string replay;
  } c;
  auto common = [&](CLI::App* sub, bool requireConfig = true) {
    auto* opt = sub->add_option("--config", c.config, "JSON run configuration");
    if (requireConfig) opt->required();
    sub->add_option("--seed", c.seed, "Override the run seed");
    sub->add_option("--threads", c.threads, "Worker threads");
    sub->add_option("--output", c.output, "Output directory");
  };

  auto* augment = app.add_subcommand("augment", "Write augmented images and a replay manifest");
  common(augment, false);
  augment->add_option("--replay", c.replay, "Replay a manifest.json instead of sampling");
  auto* calibrate = app.add_subcommand("calibrate-hardness", "Search transform strengths per hardness degree");
  common(calibrate);
  calibrate->add_option("--checkpoint", c.checkpoint, "Base model checkpoint");
  auto* train = app.add_subcommand("train", "Adversarial training");
  common(train);
  train->add_option("--epochs", c.epochs, "Override the epoch count");
  auto* evaluate = app.add_subcommand("evaluate", "Clean and robust accuracy of a checkpoint");
  common(evaluate);
  evaluate->add_option("--checkpoint", c.checkpoint, "Model checkpoint");
  auto* grid = app.add_subcommand("grid-search", "Resumable schedule search");
  common(grid);
  grid->add_option("--epochs", c.epochs, "Override the epoch count");
  auto* sweep = app.add_subcommand("sweep-diversity", "Diversity protocol sweep");
  common(sweep);
  sweep->add_option("--epochs", c.epochs, "Override the epoch count");
  auto* report = app.add_subcommand("report", "Summarize reports as CSV");
  std::vector<std::string> reportInputs;
  std::string reportOut;
  report->add_option("inputs", reportInputs, "report.json, sweep.json or results.json files")->required();
  report->add_option("--output", reportOut, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (report->parsed()) {
      std::vector<fs::path> in(reportInputs.begin(), reportInputs.end());
      return cmd_report(in, reportOut.empty() ? std::nullopt : std::optional<fs::path>(reportOut), out);
    }
    if (augment->parsed() && !c.replay.empty()) {
      if (!fs::exists(c.replay)) throw ConfigError("no such manifest: " + c.replay);
      const fs::path dir = c.output ? fs::path(*c.output) : fs::path(c.replay).parent_path() / "replay";
      return cmd_augment_replay(c.replay, dir, err);
    }
    if (c.config.empty()) throw ConfigError("--config is required");
    Overrides o{c.seed, c.threads, c.output, c.epochs, c.checkpoint};
    const RunConfig cfg = parse_run_config(load_json_file(c.config), o);
    if (augment->parsed()) return cmd_augment(cfg, err);
    if (calibrate->parsed()) return cmd_calibrate_hardness(cfg, err);
    if (train->parsed()) return cmd_train(cfg, err);
    if (evaluate->parsed()) return cmd_evaluate(cfg, err);
    if (grid->parsed()) return cmd_grid_search(cfg, err);
    if (sweep->parsed()) return cmd_sweep_diversity(cfg, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDivergence& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace augat::cli
