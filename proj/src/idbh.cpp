#include "augat/idbh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace augat {
namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + ": probability outside [0, 1]");
}

std::vector<ColorShapeEntry> biased_entries(double colorWeight, double shapeWeight, double shear, double degrees) {
  return {
      {TransformKind::Color, colorWeight, {0.1, 1.9}},
      {TransformKind::Sharpness, colorWeight, {0.1, 1.9}},
      {TransformKind::Brightness, colorWeight, {0.5, 1.9}},
      {TransformKind::Contrast, colorWeight, {0.5, 1.9}},
      {TransformKind::Autocontrast, colorWeight, {0.0, 0.0}},
      {TransformKind::Equalize, colorWeight, {0.0, 0.0}},
      {TransformKind::ShearX, shapeWeight, {0.0, shear}},
      {TransformKind::ShearY, shapeWeight, {0.0, shear}},
      {TransformKind::Rotate, shapeWeight, {0.0, degrees}},
  };
}

}  // namespace

std::string_view to_string(LayerBias bias) {
  switch (bias) {
    case LayerBias::ColorBiased: return "ColorBiased";
    case LayerBias::ShapeBiased: return "ShapeBiased";
    case LayerBias::Custom: return "Custom";
  }
  return "Custom";
}

LayerBias parse_layer_bias(std::string_view name) {
  if (name == "ColorBiased") return LayerBias::ColorBiased;
  if (name == "ShapeBiased") return LayerBias::ShapeBiased;
  if (name == "Custom") return LayerBias::Custom;
  throw std::invalid_argument("unknown color/shape bias '" + std::string(name) + "'");
}

ColorShapeLayer ColorShapeLayer::color_biased() {
  return {biased_entries(2.0, 1.0, 0.15, 10.0), LayerBias::ColorBiased};
}

ColorShapeLayer ColorShapeLayer::shape_biased() {
  return {biased_entries(1.0, 2.0, 0.3, 30.0), LayerBias::ShapeBiased};
}

void ColorShapeLayer::validate() const {
  double total = 0.0;
  for (const auto& e : entries) {
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      throw std::invalid_argument("color/shape layer: weights must be non-negative");
    total += e.weight;
    if (e.strength.lo > e.strength.hi)
      throw std::invalid_argument("color/shape layer: empty strength range for " + std::string(to_string(e.kind)));
    if (uses_strength(e.kind)) {
      TransformSpec probe;
      probe.kind = e.kind;
      probe.strength = e.strength.lo;
      augat::validate(probe);
      probe.strength = e.strength.hi;
      augat::validate(probe);
    }
    if (e.kind == TransformKind::Cropshift || e.kind == TransformKind::Cutout || e.kind == TransformKind::Padcrop ||
        e.kind == TransformKind::RandomErasing)
      throw std::invalid_argument("color/shape layer: region transforms belong to the crop/dropout layers");
  }
  if (!entries.empty() && total <= 0.0)
    throw std::invalid_argument("color/shape layer: at least one weight must be positive");
}

void IdbhSchedule::validate(int height, int width) const {
  check_probability(pFlip, "flip");
  check_probability(pCrop, "crop");
  check_probability(pColorShape, "color/shape");
  check_probability(pDropout, "dropout");
  if (cropStrength.lo < 0 || cropStrength.lo > cropStrength.hi)
    throw std::invalid_argument("crop: strength range must satisfy 0 <= lo <= hi");
  if (height > 0 && width > 0 && cropStrength.hi > std::min(height, width) - 1)
    throw std::invalid_argument("crop: strength upper bound exceeds min(H, W) - 1");
  colorShape.validate();
  if (pColorShape > 0.0 && colorShape.entries.empty())
    throw std::invalid_argument("color/shape: layer enabled without entries");
  if (!(dropoutArea.lo > 0.0 && dropoutArea.lo <= dropoutArea.hi && dropoutArea.hi <= 1.0))
    throw std::invalid_argument("dropout: area range must satisfy 0 < lo <= hi <= 1");
  if (!(dropoutAspect.lo > 0.0 && dropoutAspect.lo <= dropoutAspect.hi))
    throw std::invalid_argument("dropout: bad aspect range");
}

Image apply_idbh(const IdbhSchedule& s, const Image& img, RngStream& rng, IdbhTrace* trace) {
  s.validate(img.height(), img.width());
  IdbhTrace local;
  IdbhTrace& t = trace ? *trace : local;
  t = IdbhTrace{};
  const Fill fill = s.fill.empty() ? uniform_fill(img.channels()) : s.fill;

  Image out = img;
  if (rng.uniform01() < s.pFlip) {
    out = horizontal_flip(out);
    t.flipped = true;
  }
  if (rng.uniform01() < s.pCrop) {
    const int lines = static_cast<int>(rng.uniform_int(s.cropStrength.lo, s.cropStrength.hi));
    t.crop = sample_cropshift(out.height(), out.width(), lines, rng);
    out = cropshift_fixed(out, *t.crop, fill);
  }
  if (rng.uniform01() < s.pColorShape) {
    const auto& entries = s.colorShape.entries;
    const double total = std::accumulate(entries.begin(), entries.end(), 0.0,
                                         [](double acc, const ColorShapeEntry& e) { return acc + e.weight; });
    double pick = rng.uniform01() * total;
    std::size_t idx = 0;
    for (; idx + 1 < entries.size(); ++idx) {
      if (pick < entries[idx].weight) break;
      pick -= entries[idx].weight;
    }
    // Skip zero-weight tail entries that floating-point leftovers could land on.
    while (entries[idx].weight <= 0.0 && idx > 0) --idx;
    const ColorShapeEntry& e = entries[idx];
    TransformSpec spec;
    spec.kind = e.kind;
    spec.strength = rng.uniform_real(e.strength.lo, e.strength.hi);
    spec.interp = s.interp;
    spec.fill = fill;
    t.colorShape = sample_params(spec, out.height(), out.width(), out.channels(), rng);
    out = apply_params(*t.colorShape, out);
  }
  if (rng.uniform01() < s.pDropout) {
    TransformParams p;
    p.kind = TransformKind::RandomErasing;
    p.eraseFill = s.eraseFill;
    p.fill = fill;
    if (const auto box = sample_erase_box(out.height(), out.width(), s.dropoutArea, s.dropoutAspect, rng)) {
      p.top = box->top;
      p.left = box->left;
      p.boxHeight = box->height;
      p.boxWidth = box->width;
      p.value = static_cast<double>(box->height) * box->width / (static_cast<double>(out.height()) * out.width());
    }
    p.noiseSeed = rng.next_u64();
    t.dropout = p;
    out = apply_params(p, out);
  }
  return out;
}

Image replay_idbh(const IdbhTrace& t, const Image& img, std::span<const float> fill) {
  Image out = t.flipped ? horizontal_flip(img) : img;
  if (t.crop) out = cropshift_fixed(out, *t.crop, fill);
  if (t.colorShape) out = apply_params(*t.colorShape, out);
  if (t.dropout) out = apply_params(*t.dropout, out);
  return out;
}

Augmentation idbh_augmentation(IdbhSchedule schedule) {
  schedule.validate();
  return [schedule = std::move(schedule)](const Image& img, RngStream& rng) { return apply_idbh(schedule, img, rng); };
}

Augmentation spec_augmentation(SpecSampler sampler) {
  return [sampler = std::move(sampler)](const Image& img, RngStream& rng) {
    const TransformSpec spec = sampler(rng);
    return apply_transform(spec, img, rng);
  };
}

Augmentation identity_augmentation() {
  return [](const Image& img, RngStream&) { return img; };
}

// ---- search space -----------------------------------------------------------

SearchSpace SearchSpace::reduced_default() {
  SearchSpace s;
  for (int upper : {8, 10, 12, 14})
    for (double p : {0.5, 1.0}) s.crop.push_back({{0, upper}, p});
  s.colorShape = {ColorShapeLayer::color_biased(), ColorShapeLayer::shape_biased()};
  s.dropout.push_back({{0.02, 0.33}, 0.0});
  for (double hi : {0.33, 0.5})
    for (double p : {0.5, 1.0}) s.dropout.push_back({{0.02, hi}, p});
  return s;
}

std::vector<ScheduleCoordinate> enumerate_coordinates(const SearchSpace& space) {
  std::vector<ScheduleCoordinate> out;
  out.reserve(space.cardinality());
  int id = 0;
  for (int c = 0; c < static_cast<int>(space.crop.size()); ++c)
    for (int v = 0; v < static_cast<int>(space.colorShape.size()); ++v)
      for (int d = 0; d < static_cast<int>(space.dropout.size()); ++d) out.push_back({id++, c, v, d});
  return out;
}

IdbhSchedule schedule_at(const SearchSpace& space, const ScheduleCoordinate& coord) {
  const auto& crop = space.crop.at(static_cast<std::size_t>(coord.cropIndex));
  const auto& drop = space.dropout.at(static_cast<std::size_t>(coord.dropoutIndex));
  IdbhSchedule s;
  s.pFlip = space.pFlip;
  s.pCrop = crop.probability;
  s.cropStrength = crop.strength;
  s.pColorShape = space.pColorShape;
  s.colorShape = space.colorShape.at(static_cast<std::size_t>(coord.versionIndex));
  s.pDropout = drop.probability;
  s.dropoutArea = drop.area;
  s.dropoutAspect = space.dropoutAspect;
  return s;
}

std::vector<IdbhSchedule> enumerate_search_space(const SearchSpace& space) {
  std::vector<IdbhSchedule> out;
  for (const auto& coord : enumerate_coordinates(space)) out.push_back(schedule_at(space, coord));
  return out;
}

bool at_least_as_hard(const CropCombo& a, const CropCombo& b) {
  if (b.probability == 0.0) return true;
  return a.strength.hi >= b.strength.hi && a.strength.lo >= b.strength.lo && a.probability >= b.probability;
}

bool at_least_as_hard(const DropoutCombo& a, const DropoutCombo& b) {
  if (b.probability == 0.0) return true;
  return a.area.hi >= b.area.hi && a.area.lo >= b.area.lo && a.probability >= b.probability;
}

bool strictly_harder(const SearchSpace& space, const ScheduleCoordinate& a, const ScheduleCoordinate& b) {
  if (a.versionIndex != b.versionIndex) return false;
  const auto& ca = space.crop[static_cast<std::size_t>(a.cropIndex)];
  const auto& cb = space.crop[static_cast<std::size_t>(b.cropIndex)];
  const auto& da = space.dropout[static_cast<std::size_t>(a.dropoutIndex)];
  const auto& db = space.dropout[static_cast<std::size_t>(b.dropoutIndex)];
  if (!at_least_as_hard(ca, cb) || !at_least_as_hard(da, db)) return false;
  return !at_least_as_hard(cb, ca) || !at_least_as_hard(db, da);
}

int hardness_index(const SearchSpace& space, const ScheduleCoordinate& coord) {
  int index = 0;
  const auto& c = space.crop[static_cast<std::size_t>(coord.cropIndex)];
  for (const auto& other : space.crop)
    if (at_least_as_hard(c, other) && !at_least_as_hard(other, c)) ++index;
  const auto& d = space.dropout[static_cast<std::size_t>(coord.dropoutIndex)];
  for (const auto& other : space.dropout)
    if (at_least_as_hard(d, other) && !at_least_as_hard(other, d)) ++index;
  return index;
}

// ---- grid search ------------------------------------------------------------

std::string_view to_string(EvalStatus status) {
  switch (status) {
    case EvalStatus::Evaluated: return "evaluated";
    case EvalStatus::Skipped: return "skipped";
    case EvalStatus::Failed: return "failed";
  }
  return "failed";
}

std::vector<ScheduleCoordinate> PruningPolicy::order(const SearchSpace&,
                                                     std::vector<ScheduleCoordinate> candidates) const {
  return candidates;
}

namespace {

std::vector<ScheduleCoordinate> by_hardness(const SearchSpace& space, std::vector<ScheduleCoordinate> c) {
  std::stable_sort(c.begin(), c.end(), [&](const auto& a, const auto& b) {
    return hardness_index(space, a) < hardness_index(space, b);
  });
  return c;
}

const GridResult* incumbent(const std::vector<GridResult>& completed) {
  const GridResult* best = nullptr;
  for (const auto& r : completed)
    if (r.status == EvalStatus::Evaluated && (!best || r.score->bestRobustness > best->score->bestRobustness))
      best = &r;
  return best;
}

}  // namespace

std::vector<ScheduleCoordinate> DominancePruning::order(const SearchSpace& space,
                                                        std::vector<ScheduleCoordinate> candidates) const {
  return by_hardness(space, std::move(candidates));
}

std::optional<SkipDecision> DominancePruning::should_skip(const SearchSpace& space,
                                                          const ScheduleCoordinate& candidate,
                                                          const std::vector<GridResult>& completed) const {
  const GridResult* best = incumbent(completed);
  if (!best) return std::nullopt;
  for (const auto& r : completed) {
    if (r.status != EvalStatus::Evaluated) continue;
    const double deficit = best->score->endAccuracy - r.score->endAccuracy;
    if (deficit > margin_ && strictly_harder(space, candidate, r.coord))
      return SkipDecision{r.coord.id, "harder than schedule " + std::to_string(r.coord.id) +
                                          " whose end accuracy is " + std::to_string(deficit) +
                                          " below incumbent " + std::to_string(best->coord.id)};
  }
  return std::nullopt;
}

std::vector<ScheduleCoordinate> ConsecutiveDropPruning::order(const SearchSpace& space,
                                                              std::vector<ScheduleCoordinate> candidates) const {
  return by_hardness(space, std::move(candidates));
}

std::optional<SkipDecision> ConsecutiveDropPruning::should_skip(const SearchSpace& space,
                                                                const ScheduleCoordinate& candidate,
                                                                const std::vector<GridResult>& completed) const {
  std::vector<const GridResult*> evaluated;
  for (const auto& r : completed)
    if (r.status == EvalStatus::Evaluated) evaluated.push_back(&r);
  if (static_cast<int>(evaluated.size()) <= patience_) return std::nullopt;
  for (std::size_t i = evaluated.size() - static_cast<std::size_t>(patience_); i < evaluated.size(); ++i)
    if (!(evaluated[i]->score->bestRobustness < evaluated[i - 1]->score->bestRobustness)) return std::nullopt;
  const GridResult* last = evaluated.back();
  if (hardness_index(space, candidate) <= hardness_index(space, last->coord)) return std::nullopt;
  const GridResult* best = incumbent(completed);
  return SkipDecision{best->coord.id, std::to_string(patience_) + " consecutive robustness drops ending at schedule " +
                                          std::to_string(last->coord.id) + "; incumbent " +
                                          std::to_string(best->coord.id)};
}

std::vector<GridResult> grid_search(const SearchSpace& space, const ScheduleEvaluator& evaluator,
                                    const PruningPolicy& pruning, const GridSearchOptions& options) {
  std::vector<GridResult> completed = options.resumed;
  std::set<int> done;
  for (const auto& r : completed) done.insert(r.coord.id);

  for (const auto& coord : pruning.order(space, enumerate_coordinates(space))) {
    if (done.count(coord.id)) continue;
    GridResult result;
    result.coord = coord;
    if (auto skip = pruning.should_skip(space, coord, completed)) {
      result.status = EvalStatus::Skipped;
      result.dominatingId = skip->dominatingId;
      result.note = skip->reason;
    } else {
      try {
        result.score = evaluator(coord, schedule_at(space, coord));
        result.status = EvalStatus::Evaluated;
      } catch (const std::exception& e) {
        result.status = EvalStatus::Failed;
        result.note = e.what();
      }
    }
    completed.push_back(result);
    done.insert(coord.id);
    if (options.onResult) options.onResult(result);
  }

  std::stable_sort(completed.begin(), completed.end(), [](const GridResult& a, const GridResult& b) {
    const bool ae = a.status == EvalStatus::Evaluated, be = b.status == EvalStatus::Evaluated;
    if (ae != be) return ae;
    if (ae && a.score->bestRobustness != b.score->bestRobustness)
      return a.score->bestRobustness > b.score->bestRobustness;
    return a.coord.id < b.coord.id;
  });
  return completed;
}

// ---- diversity protocols ------------------------------------------------------

SpecSampler type_diversity_pool(const std::vector<TransformKind>& kinds, int degree, int poolSize,
                                const CalibrationTable& calibration, RngStream& rng) {
  if (poolSize < 0 || poolSize > static_cast<int>(kinds.size()))
    throw std::invalid_argument("type_diversity_pool: pool size " + std::to_string(poolSize) + " exceeds " +
                                std::to_string(kinds.size()) + " kinds");
  for (TransformKind k : kinds)
    if (k == TransformKind::Cutout || k == TransformKind::Cropshift)
      throw std::invalid_argument("type_diversity_pool: Cutout and Cropshift are excluded from the pool");
  if (poolSize == 0) {
    return [](RngStream&) { return TransformSpec{}; };
  }
  // Partial Fisher-Yates for a uniform draw without replacement.
  std::vector<TransformKind> order = kinds;
  for (int i = 0; i < poolSize; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, static_cast<std::int64_t>(order.size()) - 1));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  std::vector<TransformSpec> pool;
  for (int i = 0; i < poolSize; ++i) {
    const TransformKind k = order[static_cast<std::size_t>(i)];
    TransformSpec spec;
    spec.kind = k;
    pool.push_back(uses_strength(k) ? calibrated_spec(k, degree, calibration.at(k)) : spec);
  }
  return [pool = std::move(pool)](RngStream& r) {
    return pool[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
  };
}

SpecSampler strength_diversity_sampler(TransformKind kind, const std::vector<int>& degrees,
                                       const HardnessCalibration& calibration) {
  if (degrees.empty()) throw std::invalid_argument("strength_diversity_sampler: empty degree range");
  std::vector<TransformSpec> specs;
  for (int d : degrees) specs.push_back(calibrated_spec(kind, d, calibration));
  return [specs = std::move(specs)](RngStream& r) {
    return specs[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(specs.size()) - 1))];
  };
}

std::vector<std::vector<int>> strength_diversity_ranges() {
  return {{4}, {3, 4, 5}, {2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6, 7}};
}

}  // namespace augat
