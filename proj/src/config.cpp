#include "augat/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace augat::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 0x494E4954;
constexpr std::uint64_t kPlacementStream = 0x504C4143;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

const json* find(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

double get_number(const json& j, const char* key, double fallback) {
  const json* v = find(j, key);
  return v ? number(*v, key) : fallback;
}

template <typename T>
T get_int(const json& j, const char* key, T fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(std::string("'") + key + "' must be an integer");
  return v->get<T>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(std::string("'") + key + "' must be true or false");
  return v->get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(std::string("'") + key + "' must be a string");
  return v->get<std::string>();
}

RangeD range_d(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) fail(std::string("'") + what + "' must be [lo, hi]");
  return {number(j[0], what), number(j[1], what)};
}

RangeI range_i(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    fail(std::string("'") + what + "' must be [lo, hi] integers");
  return {j[0].get<int>(), j[1].get<int>()};
}

Fill fill_from(const json* j, int channels) {
  if (!j) return uniform_fill(channels, 0.0f);
  if (j->is_number()) return uniform_fill(channels, static_cast<float>(j->get<double>()));
  if (!j->is_array() || static_cast<int>(j->size()) != channels) fail("'fill' must be a number or one value per channel");
  Fill f;
  for (const auto& v : *j) f.push_back(static_cast<float>(number(v, "fill")));
  return f;
}

EraseFill erase_fill_from(const std::string& s) {
  if (s == "Noise") return EraseFill::Noise;
  if (s == "Constant") return EraseFill::Constant;
  fail("eraseFill must be Noise or Constant, got '" + s + "'");
}

Interp interp_from(const std::string& s) {
  if (s == "Nearest") return Interp::Nearest;
  if (s == "Bilinear") return Interp::Bilinear;
  fail("interp must be Nearest or Bilinear, got '" + s + "'");
}

const char* name(EraseFill f) { return f == EraseFill::Noise ? "Noise" : "Constant"; }
const char* name(Interp i) { return i == Interp::Nearest ? "Nearest" : "Bilinear"; }

EvalStatus status_from(const std::string& s) {
  for (EvalStatus st : {EvalStatus::Evaluated, EvalStatus::Skipped, EvalStatus::Failed})
    if (to_string(st) == s) return st;
  fail("unknown status '" + s + "'");
}

std::vector<fs::path> paths(const json* j, const char* what) {
  std::vector<fs::path> out;
  if (!j) return out;
  if (j->is_string()) {
    out.emplace_back(j->get<std::string>());
  } else if (j->is_array()) {
    for (const auto& p : *j) {
      if (!p.is_string()) fail(std::string("'") + what + "' entries must be strings");
      out.emplace_back(p.get<std::string>());
    }
  } else {
    fail(std::string("'") + what + "' must be a path or a list of paths");
  }
  for (const auto& p : out)
    if (!fs::exists(p)) fail(std::string(what) + " path does not exist: " + p.string());
  return out;
}

Dataset filter_limit(Dataset d, const std::vector<int>& classes, std::size_t limit) {
  if (!classes.empty()) {
    std::vector<Image> images;
    std::vector<int> labels;
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto it = std::find(classes.begin(), classes.end(), d.labels[i]);
      if (it == classes.end()) continue;
      images.push_back(std::move(d.images[i]));
      labels.push_back(static_cast<int>(it - classes.begin()));
    }
    d = Dataset(std::move(images), std::move(labels), static_cast<int>(classes.size()));
  }
  if (limit > 0 && limit < d.size()) {
    d.images.resize(limit);
    d.labels.resize(limit);
  }
  return d;
}

Dataset concat(std::vector<Dataset> parts) {
  Dataset out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].classCount != out.classCount) throw DataError("dataset parts disagree on class count");
    for (auto& img : parts[i].images) out.images.push_back(std::move(img));
    out.labels.insert(out.labels.end(), parts[i].labels.begin(), parts[i].labels.end());
  }
  return out;
}

}  // namespace

std::string config_hash(const json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

json Provenance::to_json() const { return {{"seed", seed}, {"configHash", configHash}, {"toolVersion", toolVersion}}; }

std::string Provenance::line() const {
  return "seed=" + std::to_string(seed) + " configHash=" + configHash + " toolVersion=" + toolVersion;
}

double number(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
      } else {
        const double num = std::stod(s.substr(0, slash), &used);
        if (used == slash) {
          const std::string den = s.substr(slash + 1);
          const double d = std::stod(den, &used);
          if (used == den.size() && d != 0.0) return num / d;
        }
      }
    } catch (const std::exception&) {
    }
  }
  fail(std::string("'") + what + "' must be a number or a fraction like \"8/255\"");
}

// ---- attack ---------------------------------------------------------------------

json to_json(const AttackConfig& c) {
  return {{"epsilon", c.epsilon}, {"stepSize", c.stepSize},           {"steps", c.steps},
          {"restarts", c.restarts}, {"init", std::string(to_string(c.init))}, {"keepBest", c.keepBest}};
}

AttackConfig attack_from_json(const json& j, AttackConfig c) {
  if (!j.is_object()) fail("attack config must be an object");
  c.epsilon = get_number(j, "epsilon", c.epsilon);
  c.stepSize = get_number(j, "stepSize", c.stepSize);
  c.steps = get_int(j, "steps", c.steps);
  c.restarts = get_int(j, "restarts", c.restarts);
  try {
    c.init = parse_attack_init(get_string(j, "init", std::string(to_string(c.init))));
    c.keepBest = get_bool(j, "keepBest", c.keepBest);
    c.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return c;
}

// ---- transforms and traces ----------------------------------------------------------

json to_json(const TransformParams& p) {
  return {{"kind", std::string(to_string(p.kind))},
          {"value", p.value},
          {"top", p.top},
          {"left", p.left},
          {"boxHeight", p.boxHeight},
          {"boxWidth", p.boxWidth},
          {"crop",
           {{"lines", p.crop.lines},
            {"left", p.crop.removed.left},
            {"right", p.crop.removed.right},
            {"top", p.crop.removed.top},
            {"bottom", p.crop.removed.bottom},
            {"shiftX", p.crop.shiftX},
            {"shiftY", p.crop.shiftY}}},
          {"noiseSeed", p.noiseSeed},
          {"eraseFill", name(p.eraseFill)},
          {"interp", name(p.interp)},
          {"fill", p.fill}};
}

namespace {

json crop_json(const CropshiftParams& c) {
  return {{"lines", c.lines},        {"left", c.removed.left},     {"right", c.removed.right},
          {"top", c.removed.top},    {"bottom", c.removed.bottom}, {"shiftX", c.shiftX},
          {"shiftY", c.shiftY}};
}

CropshiftParams crop_from(const json& j) {
  CropshiftParams c;
  c.lines = j.at("lines").get<int>();
  c.removed = {j.at("left").get<int>(), j.at("right").get<int>(), j.at("top").get<int>(), j.at("bottom").get<int>()};
  c.shiftX = j.at("shiftX").get<int>();
  c.shiftY = j.at("shiftY").get<int>();
  return c;
}

}  // namespace

TransformParams params_from_json(const json& j) {
  TransformParams p;
  p.kind = parse_transform_kind(j.at("kind").get<std::string>());
  p.value = j.at("value").get<double>();
  p.top = j.at("top").get<int>();
  p.left = j.at("left").get<int>();
  p.boxHeight = j.at("boxHeight").get<int>();
  p.boxWidth = j.at("boxWidth").get<int>();
  p.crop = crop_from(j.at("crop"));
  p.noiseSeed = j.at("noiseSeed").get<std::uint64_t>();
  p.eraseFill = erase_fill_from(j.at("eraseFill").get<std::string>());
  p.interp = interp_from(j.at("interp").get<std::string>());
  p.fill = j.at("fill").get<std::vector<float>>();
  return p;
}

json to_json(const IdbhTrace& t) {
  json j = {{"flipped", t.flipped}, {"crop", nullptr}, {"colorShape", nullptr}, {"dropout", nullptr}};
  if (t.crop) j["crop"] = crop_json(*t.crop);
  if (t.colorShape) j["colorShape"] = to_json(*t.colorShape);
  if (t.dropout) j["dropout"] = to_json(*t.dropout);
  return j;
}

IdbhTrace trace_from_json(const json& j) {
  IdbhTrace t;
  t.flipped = j.at("flipped").get<bool>();
  if (const json* c = find(j, "crop")) t.crop = crop_from(*c);
  if (const json* c = find(j, "colorShape")) t.colorShape = params_from_json(*c);
  if (const json* c = find(j, "dropout")) t.dropout = params_from_json(*c);
  return t;
}

json to_json(const ColorShapeLayer& layer) {
  if (layer.bias != LayerBias::Custom) return std::string(to_string(layer.bias));
  json entries = json::array();
  for (const auto& e : layer.entries)
    entries.push_back(
        {{"kind", std::string(to_string(e.kind))}, {"weight", e.weight}, {"strength", {e.strength.lo, e.strength.hi}}});
  return entries;
}

ColorShapeLayer color_shape_from_json(const json& j) {
  try {
    if (j.is_string()) {
      const LayerBias bias = parse_layer_bias(j.get<std::string>());
      if (bias == LayerBias::ColorBiased) return ColorShapeLayer::color_biased();
      if (bias == LayerBias::ShapeBiased) return ColorShapeLayer::shape_biased();
      fail("a custom color/shape layer needs an explicit entry list");
    }
    if (!j.is_array()) fail("colorShape must be ColorBiased, ShapeBiased or a list of entries");
    ColorShapeLayer layer;
    for (const auto& e : j) {
      ColorShapeEntry entry;
      entry.kind = parse_transform_kind(e.at("kind").get<std::string>());
      entry.weight = get_number(e, "weight", 1.0);
      entry.strength = e.contains("strength") ? range_d(e.at("strength"), "strength") : RangeD{};
      layer.entries.push_back(entry);
    }
    layer.validate();
    return layer;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("colorShape: ") + e.what());
  }
}

json to_json(const IdbhSchedule& s) {
  return {{"pFlip", s.pFlip},
          {"pCrop", s.pCrop},
          {"cropStrength", {s.cropStrength.lo, s.cropStrength.hi}},
          {"pColorShape", s.pColorShape},
          {"colorShape", s.colorShape.entries.empty() ? json(nullptr) : to_json(s.colorShape)},
          {"pDropout", s.pDropout},
          {"dropoutArea", {s.dropoutArea.lo, s.dropoutArea.hi}},
          {"dropoutAspect", {s.dropoutAspect.lo, s.dropoutAspect.hi}},
          {"fill", s.fill},
          {"eraseFill", name(s.eraseFill)},
          {"interp", name(s.interp)}};
}

IdbhSchedule schedule_from_json(const json& j, int channels) {
  if (!j.is_object()) fail("schedule must be an object");
  IdbhSchedule s;
  s.pFlip = get_number(j, "pFlip", s.pFlip);
  s.pCrop = get_number(j, "pCrop", s.pCrop);
  if (const json* v = find(j, "cropStrength")) s.cropStrength = range_i(*v, "cropStrength");
  s.pColorShape = get_number(j, "pColorShape", s.pColorShape);
  if (const json* v = find(j, "colorShape")) s.colorShape = color_shape_from_json(*v);
  s.pDropout = get_number(j, "pDropout", s.pDropout);
  if (const json* v = find(j, "dropoutArea")) s.dropoutArea = range_d(*v, "dropoutArea");
  if (const json* v = find(j, "dropoutAspect")) s.dropoutAspect = range_d(*v, "dropoutAspect");
  s.fill = fill_from(find(j, "fill"), channels);
  s.eraseFill = erase_fill_from(get_string(j, "eraseFill", "Noise"));
  s.interp = interp_from(get_string(j, "interp", "Nearest"));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("schedule: ") + e.what());
  }
  return s;
}

json to_json(const SearchSpace& space) {
  json crop = json::array(), version = json::array(), dropout = json::array();
  for (const auto& c : space.crop)
    crop.push_back({{"strength", {c.strength.lo, c.strength.hi}}, {"probability", c.probability}});
  for (const auto& v : space.colorShape) version.push_back(to_json(v));
  for (const auto& d : space.dropout)
    dropout.push_back({{"area", {d.area.lo, d.area.hi}}, {"probability", d.probability}});
  return {{"pFlip", space.pFlip},
          {"pColorShape", space.pColorShape},
          {"crop", crop},
          {"colorShape", version},
          {"dropout", dropout},
          {"dropoutAspect", {space.dropoutAspect.lo, space.dropoutAspect.hi}}};
}

SearchSpace search_space_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "default") return SearchSpace::reduced_default();
    fail("searchSpace must be \"default\" or an object");
  }
  if (!j.is_object()) fail("searchSpace must be \"default\" or an object");
  SearchSpace s = SearchSpace::reduced_default();
  s.pFlip = get_number(j, "pFlip", s.pFlip);
  s.pColorShape = get_number(j, "pColorShape", s.pColorShape);
  if (const json* v = find(j, "crop")) {
    s.crop.clear();
    for (const auto& c : *v) s.crop.push_back({range_i(c.at("strength"), "crop.strength"), number(c.at("probability"), "probability")});
  }
  if (const json* v = find(j, "colorShape")) {
    s.colorShape.clear();
    for (const auto& c : *v) s.colorShape.push_back(color_shape_from_json(c));
  }
  if (const json* v = find(j, "dropout")) {
    s.dropout.clear();
    for (const auto& d : *v) s.dropout.push_back({range_d(d.at("area"), "dropout.area"), number(d.at("probability"), "probability")});
  }
  if (const json* v = find(j, "dropoutAspect")) s.dropoutAspect = range_d(*v, "dropoutAspect");
  if (s.cardinality() == 0) fail("searchSpace has no schedules");
  return s;
}

TransformSpec transform_spec_from_json(const json& j, int channels) {
  if (!j.is_object()) fail("transform must be an object");
  TransformSpec s;
  try {
    s.kind = parse_transform_kind(j.at("kind").get<std::string>());
  } catch (const std::exception& e) {
    fail(std::string("transform.kind: ") + e.what());
  }
  s.strength = get_number(j, "strength", 0.0);
  const std::string placement = get_string(j, "placement", "Random");
  if (placement == "Fixed")
    s.placement = Placement::Fixed;
  else if (placement != "Random")
    fail("placement must be Random or Fixed");
  s.insideOnly = get_bool(j, "insideOnly", false);
  s.interp = interp_from(get_string(j, "interp", "Nearest"));
  s.fill = fill_from(find(j, "fill"), channels);
  s.eraseFill = erase_fill_from(get_string(j, "eraseFill", "Noise"));
  try {
    validate(s);
  } catch (const std::invalid_argument& e) {
    fail(std::string("transform: ") + e.what());
  }
  return s;
}

json to_json(const GridResult& r) {
  json score = nullptr;
  if (r.score)
    score = {{"bestRobustness", r.score->bestRobustness},
             {"endRobustness", r.score->endRobustness},
             {"bestAccuracy", r.score->bestAccuracy},
             {"endAccuracy", r.score->endAccuracy}};
  return {{"id", r.coord.id},
          {"cropIndex", r.coord.cropIndex},
          {"versionIndex", r.coord.versionIndex},
          {"dropoutIndex", r.coord.dropoutIndex},
          {"status", std::string(to_string(r.status))},
          {"score", score},
          {"dominatingId", r.dominatingId},
          {"note", r.note}};
}

GridResult grid_result_from_json(const json& j) {
  GridResult r;
  r.coord = {j.at("id").get<int>(), j.at("cropIndex").get<int>(), j.at("versionIndex").get<int>(),
             j.at("dropoutIndex").get<int>()};
  r.status = status_from(j.at("status").get<std::string>());
  if (const json* s = find(j, "score"))
    r.score = RobustnessScore{s->at("bestRobustness").get<double>(), s->at("endRobustness").get<double>(),
                              s->at("bestAccuracy").get<double>(), s->at("endAccuracy").get<double>()};
  r.dominatingId = j.value("dominatingId", -1);
  r.note = j.value("note", std::string());
  return r;
}

// ---- data -----------------------------------------------------------------------------

LoadedData load_data(const DataConfig& cfg) {
  switch (cfg.source) {
    case DataConfig::Source::Synthetic: {
      SyntheticSpec train = cfg.synthetic;
      train.count = cfg.trainCount;
      SyntheticSpec test = cfg.synthetic;
      test.count = cfg.testCount;
      test.labelNoise = 0.0;
      return {make_synthetic(train, 0), make_synthetic(test, 1)};
    }
    case DataConfig::Source::Cifar: {
      std::vector<Dataset> train, test;
      const int classes = 10;
      for (const auto& p : cfg.train) train.push_back(load_cifar_binary(p, classes));
      for (const auto& p : cfg.test) test.push_back(load_cifar_binary(p, classes));
      return {filter_limit(concat(std::move(train)), cfg.classes, cfg.limitTrain),
              filter_limit(concat(std::move(test)), cfg.classes, cfg.limitTest)};
    }
    case DataConfig::Source::Png: {
      std::vector<std::string> trainNames, testNames;
      Dataset train = load_png_directory(cfg.train.front(), &trainNames);
      Dataset test = load_png_directory(cfg.test.front(), &testNames);
      if (trainNames != testNames) throw DataError("train and test class directories differ");
      return {filter_limit(std::move(train), cfg.classes, cfg.limitTrain),
              filter_limit(std::move(test), cfg.classes, cfg.limitTest)};
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

DataConfig parse_data(const json* j) {
  DataConfig d;
  if (!j) return d;
  const std::string source = get_string(*j, "source", "synthetic");
  if (source == "synthetic") {
    d.source = DataConfig::Source::Synthetic;
    d.trainCount = get_int<std::size_t>(*j, "trainCount", d.trainCount);
    d.testCount = get_int<std::size_t>(*j, "testCount", d.testCount);
    if (const json* s = find(*j, "synthetic")) {
      auto& sp = d.synthetic;
      sp.height = get_int(*s, "height", sp.height);
      sp.width = get_int(*s, "width", sp.width);
      sp.channels = get_int(*s, "channels", sp.channels);
      sp.classCount = get_int(*s, "classCount", sp.classCount);
      sp.margin = get_number(*s, "margin", sp.margin);
      sp.noise = get_number(*s, "noise", sp.noise);
      sp.labelNoise = get_number(*s, "labelNoise", sp.labelNoise);
      sp.jitter = get_int(*s, "jitter", sp.jitter);
      sp.seed = get_int<std::uint64_t>(*s, "seed", sp.seed);
    }
    try {
      d.synthetic.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (d.trainCount == 0 || d.testCount == 0) fail("synthetic trainCount and testCount must be positive");
  } else if (source == "cifar" || source == "png") {
    d.source = source == "cifar" ? DataConfig::Source::Cifar : DataConfig::Source::Png;
    d.train = paths(find(*j, "train"), "data.train");
    d.test = paths(find(*j, "test"), "data.test");
    if (d.train.empty() || d.test.empty()) fail("data.train and data.test are required for " + source);
    if (d.source == DataConfig::Source::Png && (d.train.size() != 1 || d.test.size() != 1))
      fail("png data takes one train and one test directory");
    if (const json* c = find(*j, "classes")) d.classes = c->get<std::vector<int>>();
    if (!d.classes.empty() && d.classes.size() < 2) fail("data.classes needs at least two classes");
    d.limitTrain = get_int<std::size_t>(*j, "limitTrain", 0);
    d.limitTest = get_int<std::size_t>(*j, "limitTest", 0);
  } else {
    fail("data.source must be synthetic, cifar or png");
  }
  return d;
}

AugmentationConfig parse_augmentation(const json* j, int channels) {
  AugmentationConfig a;
  if (!j) return a;
  const std::string type = get_string(*j, "type", "none");
  if (type == "none") {
    a.type = AugmentationType::None;
  } else if (type == "idbh") {
    a.type = AugmentationType::Idbh;
    const json* s = find(*j, "schedule");
    if (!s) fail("augmentation.schedule is required for idbh");
    a.schedule = schedule_from_json(*s, channels);
  } else if (type == "transform") {
    a.type = AugmentationType::Transform;
    const json* t = find(*j, "transform");
    if (!t) fail("augmentation.transform is required");
    a.transform = transform_spec_from_json(*t, channels);
  } else if (type == "calibrated") {
    a.type = AugmentationType::Calibrated;
    try {
      a.calibratedKind = parse_transform_kind(get_string(*j, "kind", ""));
    } catch (const std::invalid_argument& e) {
      fail(std::string("augmentation.kind: ") + e.what());
    }
    a.calibratedDegree = get_int(*j, "degree", 0);
    if (a.calibratedDegree < 1 || a.calibratedDegree > 7) fail("augmentation.degree must be in 1..7");
  } else {
    fail("augmentation.type must be none, idbh, transform or calibrated");
  }
  return a;
}

}  // namespace

RunConfig parse_run_config(json config, const Overrides& o) {
  if (!config.is_object()) fail("configuration must be a JSON object");
  if (o.seed) config["seed"] = *o.seed;
  if (o.threads) config["threads"] = *o.threads;
  if (o.output) config["output"] = *o.output;
  if (o.epochs) config["train"]["epochs"] = *o.epochs;
  if (o.checkpoint) config["checkpoint"] = *o.checkpoint;

  RunConfig c;
  c.seed = get_int<std::uint64_t>(config, "seed", 0);
  c.threads = get_int(config, "threads", 1);
  if (c.threads < 1) fail("threads must be >= 1");
  c.output = get_string(config, "output", "augat-out");
  c.data = parse_data(find(config, "data"));

  const json* model = find(config, "model");
  c.modelLayers = model ? get_string(*model, "layers", "") : "";

  if (const json* opt = find(config, "optimizer")) {
    c.optimizer.learningRate = get_number(*opt, "learningRate", c.optimizer.learningRate);
    c.optimizer.momentum = get_number(*opt, "momentum", c.optimizer.momentum);
    c.optimizer.weightDecay = get_number(*opt, "weightDecay", c.optimizer.weightDecay);
    if (const json* m = find(*opt, "milestones")) {
      for (const auto& e : *m) {
        if (e.is_array() && e.size() == 2)
          c.optimizer.schedule.push_back({e[0].get<int>(), number(e[1], "milestone multiplier")});
        else
          c.optimizer.schedule.push_back({e.at("epoch").get<int>(), number(e.at("multiplier"), "multiplier")});
      }
    }
    if (!(c.optimizer.learningRate > 0.0)) fail("optimizer.learningRate must be positive");
  } else {
    c.optimizer.schedule = {{100, 0.1}, {150, 0.1}};
  }

  if (const json* t = find(config, "train")) {
    c.train.epochs = get_int(*t, "epochs", c.train.epochs);
    c.train.batchSize = get_int<std::size_t>(*t, "batchSize", c.train.batchSize);
    c.train.applyProbability = get_number(*t, "applyProbability", c.train.applyProbability);
    c.train.warmupEpochs = get_int(*t, "warmupEpochs", c.train.warmupEpochs);
    if (const json* s = find(*t, "swaStart")) c.train.swaStart = s->get<int>();
    c.train.trackSize = get_int<std::size_t>(*t, "trackSize", c.train.trackSize);
  }
  AttackConfig eval = AttackConfig::pgd(50, 5);
  if (const json* a = find(config, "attacks")) {
    if (const json* v = find(*a, "train")) c.train.trainAttack = attack_from_json(*v, c.train.trainAttack);
    if (const json* v = find(*a, "track")) c.train.trackAttack = attack_from_json(*v, c.train.trackAttack);
    if (const json* v = find(*a, "eval")) eval = attack_from_json(*v, eval);
  }
  c.evalAttack = eval;
  c.train.seed = c.seed;
  c.train.threads = c.threads;
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }

  c.augmentation = parse_augmentation(find(config, "augmentation"), c.channels());
  if (const json* p = find(config, "calibration")) {
    c.calibrationFile = paths(p, "calibration").front();
  }
  if (c.augmentation.type == AugmentationType::Calibrated && !c.calibrationFile)
    fail("calibrated augmentation needs a 'calibration' file");
  if (const json* p = find(config, "checkpoint")) c.checkpoint = paths(p, "checkpoint").front();
  c.raw = std::move(config);
  return c;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config " + path.string() + ": " + e.what());
  }
}

json RunConfig::experiment() const {
  json j = raw;
  j.erase("output");
  return j;
}

Provenance RunConfig::provenance() const { return {seed, config_hash(experiment()), kToolVersion}; }

int RunConfig::channels() const {
  if (data.source == DataConfig::Source::Synthetic) return data.synthetic.channels;
  return 3;
}

nn::ModelSpec model_spec(const RunConfig& cfg, const Dataset& data) {
  if (data.empty()) throw DataError("empty dataset");
  const Image& first = data.images.front();
  try {
    if (cfg.modelLayers.empty())
      return nn::ModelSpec::desk_default(first.height(), first.width(), first.channels(), data.classCount);
    return nn::ModelSpec::parse(cfg.modelLayers, first.height(), first.width(), first.channels(), data.classCount);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

nn::Model initial_model(const RunConfig& cfg, const Dataset& data) {
  RngStream rng(cfg.seed, kInitStream);
  return nn::Model::initialized(model_spec(cfg, data), rng);
}

Augmentation make_augmentation(const AugmentationConfig& aug, const RunConfig& cfg, int height, int width,
                               const CalibrationTable* calibration) {
  switch (aug.type) {
    case AugmentationType::None:
      return identity_augmentation();
    case AugmentationType::Idbh:
      try {
        aug.schedule.validate(height, width);
      } catch (const std::invalid_argument& e) {
        fail(std::string("schedule: ") + e.what());
      }
      return idbh_augmentation(aug.schedule);
    case AugmentationType::Transform: {
      TransformSpec spec = aug.transform;
      if (spec.placement == Placement::Fixed) {
        RngStream rng(cfg.seed, kPlacementStream);
        spec = fix_placement(spec, height, width, cfg.channels(), rng);
      }
      return spec_augmentation([spec](RngStream&) { return spec; });
    }
    case AugmentationType::Calibrated: {
      if (!calibration) fail("calibrated augmentation needs a calibration table");
      try {
        const TransformSpec spec =
            calibrated_spec(aug.calibratedKind, aug.calibratedDegree, calibration->at(aug.calibratedKind));
        return spec_augmentation([spec](RngStream&) { return spec; });
      } catch (const std::out_of_range& e) {
        fail(e.what());
      }
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace augat::cli
