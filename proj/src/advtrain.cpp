#include "augat/advtrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace augat {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kAugmentStream = 0x4155;
constexpr std::uint64_t kAttackStream = 0x4154;
constexpr std::uint64_t kTrackStream = 0x5452;
constexpr std::uint64_t kSubsetStream = 0x5355;

struct Candidate {
  bool fooled = false;
  double loss = -std::numeric_limits<double>::infinity();
  bool set = false;

  bool beats(const Candidate& other) const {
    if (!other.set) return true;
    if (fooled != other.fooled) return fooled;
    return loss > other.loss;
  }
};

std::vector<std::size_t> shuffled(std::size_t n, RngStream rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

// ---- attack -------------------------------------------------------------------

std::string_view to_string(AttackInit init) { return init == AttackInit::Zero ? "Zero" : "RandomUniform"; }

AttackInit parse_attack_init(std::string_view name) {
  if (name == "Zero") return AttackInit::Zero;
  if (name == "RandomUniform") return AttackInit::RandomUniform;
  throw std::invalid_argument("unknown attack init '" + std::string(name) + "'");
}

AttackConfig AttackConfig::pgd(int steps, int restarts) {
  AttackConfig c;
  c.steps = steps;
  c.restarts = restarts;
  return c;
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("attack: epsilon must be >= 0");
  if (!(stepSize >= 0.0) || !std::isfinite(stepSize)) throw std::invalid_argument("attack: step size must be >= 0");
  if (steps < 0) throw std::invalid_argument("attack: steps must be >= 0");
  if (restarts < 1) throw std::invalid_argument("attack: restarts must be >= 1");
}

std::vector<Image> pgd_attack(const nn::Model& model, std::span<const Image> batch, std::span<const int> labels,
                              const AttackConfig& cfg, const RngStream& rng, std::uint64_t firstId, int threads) {
  cfg.validate();
  if (labels.size() != batch.size()) throw std::invalid_argument("pgd_attack: batch/label size mismatch");
  std::vector<Image> best(batch.begin(), batch.end());
  if (batch.empty() || cfg.epsilon == 0.0) return best;

  const std::size_t n = batch.size();
  const auto classes = static_cast<std::size_t>(model.spec().classCount);
  const float eps = static_cast<float>(cfg.epsilon);
  const float step = static_cast<float>(cfg.stepSize);

  std::vector<RngStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.push_back(rng.split(firstId + i));

  auto project = [&](std::size_t i, Image& img) {
    auto x = batch[i].data();
    auto v = img.data();
    for (std::size_t p = 0; p < v.size(); ++p)
      v[p] = std::clamp(v[p], std::max(0.0f, x[p] - eps), std::min(1.0f, x[p] + eps));
  };

  std::vector<Candidate> bestScore(n);
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<Image> cur(batch.begin(), batch.end());
    if (cfg.init == AttackInit::RandomUniform)
      for (std::size_t i = 0; i < n; ++i) {
        for (float& v : cur[i].data()) v += static_cast<float>(streams[i].uniform_real(-cfg.epsilon, cfg.epsilon));
        project(i, cur[i]);
      }

    auto consider = [&](std::size_t i, std::span<const float> logits, double loss) {
      const Candidate c{nn::misclassified(logits, labels[i]), loss, true};
      if (c.beats(bestScore[i])) {
        bestScore[i] = c;
        best[i] = cur[i];
      }
    };

    for (int t = 0;; ++t) {
      const bool scoreHere = t == cfg.steps || (cfg.keepBest && t > 0);
      if (t == cfg.steps) {
        const auto logits = nn::forward(model, cur);
        for (std::size_t i = 0; i < n; ++i) {
          const auto row = std::span<const float>(logits).subspan(i * classes, classes);
          consider(i, row, nn::cross_entropy(row, labels[i]));
        }
        break;
      }
      const auto g = nn::loss_and_grads(model, cur, labels, nn::GradMode::InputsOnly, threads);
      if (scoreHere)
        for (std::size_t i = 0; i < n; ++i)
          consider(i, std::span<const float>(g.logits).subspan(i * classes, classes), g.perExampleLoss[i]);
      for (std::size_t i = 0; i < n; ++i) {
        auto v = cur[i].data();
        const auto& grad = g.inputGrads[i];
        for (std::size_t p = 0; p < v.size(); ++p) {
          if (grad[p] > 0.0f)
            v[p] += step;
          else if (grad[p] < 0.0f)
            v[p] -= step;
        }
        project(i, cur[i]);
      }
    }
  }
  return best;
}

// ---- evaluation ---------------------------------------------------------------

EvalResult evaluate(const nn::Model& model, const Dataset& data, const AttackConfig& cfg, const EvalOptions& opts) {
  cfg.validate();
  std::vector<std::size_t> indices = opts.subset;
  if (indices.empty()) {
    indices.resize(data.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  }
  if (indices.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const RngStream attackRng(opts.seed, kAttackStream);
  const std::size_t batchSize = std::max<std::size_t>(opts.batchSize, 1);

  std::size_t clean = 0, robust = 0;
  for (std::size_t start = 0; start < indices.size(); start += batchSize) {
    const std::size_t end = std::min(indices.size(), start + batchSize);
    std::vector<Image> imgs;
    std::vector<int> labels;
    for (std::size_t k = start; k < end; ++k) {
      if (indices[k] >= data.size()) throw std::out_of_range("evaluate: subset index out of range");
      imgs.push_back(data.images[indices[k]]);
      labels.push_back(data.labels[indices[k]]);
    }
    const auto cleanPred = nn::predict(model, imgs);
    for (std::size_t k = 0; k < imgs.size(); ++k) clean += cleanPred[k] == labels[k];
    if (cfg.epsilon == 0.0) {
      for (std::size_t k = 0; k < imgs.size(); ++k) robust += cleanPred[k] == labels[k];
      continue;
    }
    const auto adv = pgd_attack(model, imgs, labels, cfg, attackRng, start, opts.threads);
    const auto advPred = nn::predict(model, adv);
    for (std::size_t k = 0; k < imgs.size(); ++k) robust += advPred[k] == labels[k];
  }
  const double n = static_cast<double>(indices.size());
  return {static_cast<double>(clean) / n, static_cast<double>(robust) / n, indices.size()};
}

double evaluate_robustness(const nn::Model& model, const Dataset& data, const AttackConfig& cfg,
                           const EvalOptions& opts) {
  return evaluate(model, data, cfg, opts).robustAccuracy;
}

double clean_accuracy(const nn::Model& model, const Dataset& data) {
  AttackConfig none;
  none.epsilon = 0.0;
  return evaluate(model, data, none).cleanAccuracy;
}

Dataset augment_dataset(const Dataset& data, const Augmentation& augmentation, std::uint64_t seed) {
  const RngStream base(seed, kAugmentStream);
  Dataset out = data;
  for (std::size_t i = 0; i < data.size(); ++i) {
    RngStream s = base.split(i);
    out.images[i] = augmentation(data.images[i], s);
  }
  return out;
}

HardnessReport hardness_from(double baseRobustness, double augmentedRobustness) {
  if (baseRobustness < 0.0 || augmentedRobustness < 0.0)
    throw std::invalid_argument("hardness: robustness must be non-negative");
  HardnessReport r{baseRobustness, augmentedRobustness, 0.0, false};
  if (augmentedRobustness == 0.0) {
    r.hardness = std::numeric_limits<double>::infinity();
    r.infinite = true;
  } else {
    r.hardness = baseRobustness / augmentedRobustness;
  }
  return r;
}

HardnessReport measure_hardness(const nn::Model& model, const Dataset& testData, const Augmentation& augmentation,
                                const AttackConfig& cfg, const EvalOptions& opts) {
  const double base = evaluate_robustness(model, testData, cfg, opts);
  const double augmented = evaluate_robustness(model, augment_dataset(testData, augmentation, opts.seed), cfg, opts);
  return hardness_from(base, augmented);
}

double epsilon_warmup(int epoch, int warmupEpochs, double targetEps) {
  if (warmupEpochs < 1) throw std::invalid_argument("epsilon_warmup: warmupEpochs must be >= 1");
  if (epoch < 0) throw std::invalid_argument("epsilon_warmup: negative epoch");
  if (epoch + 1 >= warmupEpochs) return targetEps;
  return targetEps * static_cast<double>(epoch + 1) / static_cast<double>(warmupEpochs);
}

// ---- report -------------------------------------------------------------------

void TrainReport::summarize() {
  bestEpoch = -1;
  bestRobustness = endRobustness = bestAccuracy = endAccuracy = gap = 0.0;
  if (epochs.empty()) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < epochs.size(); ++i)
    if (epochs[i].robustAccuracy > epochs[best].robustAccuracy) best = i;
  bestEpoch = epochs[best].epoch;
  bestRobustness = epochs[best].robustAccuracy;
  bestAccuracy = epochs[best].cleanAccuracy;
  endRobustness = epochs.back().robustAccuracy;
  endAccuracy = epochs.back().cleanAccuracy;
  gap = bestRobustness - endRobustness;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : epochs)
    curve.push_back({{"epoch", e.epoch},
                     {"learningRate", e.learningRate},
                     {"epsilon", e.epsilon},
                     {"trainLoss", e.trainLoss},
                     {"cleanAccuracy", e.cleanAccuracy},
                     {"robustAccuracy", e.robustAccuracy}});
  return {{"bestEpoch", bestEpoch},   {"bestRobustness", bestRobustness}, {"endRobustness", endRobustness},
          {"bestAccuracy", bestAccuracy}, {"endAccuracy", endAccuracy},   {"gap", gap},
          {"averaged", averaged},     {"trackSubset", trackSubset},       {"epochs", curve}};
}

TrainReport TrainReport::from_json(const nlohmann::json& j) {
  TrainReport r;
  for (const auto& e : j.at("epochs"))
    r.epochs.push_back({e.at("epoch").get<int>(), e.at("learningRate").get<double>(), e.at("epsilon").get<double>(),
                        e.at("trainLoss").get<double>(), e.at("cleanAccuracy").get<double>(),
                        e.at("robustAccuracy").get<double>()});
  r.bestEpoch = j.at("bestEpoch").get<int>();
  r.bestRobustness = j.at("bestRobustness").get<double>();
  r.endRobustness = j.at("endRobustness").get<double>();
  r.bestAccuracy = j.at("bestAccuracy").get<double>();
  r.endAccuracy = j.at("endAccuracy").get<double>();
  r.gap = j.at("gap").get<double>();
  r.averaged = j.value("averaged", false);
  r.trackSubset = j.value("trackSubset", std::vector<std::size_t>{});
  return r;
}

std::string TrainReport::csv_header() {
  return "epochs,bestEpoch,bestRobustness,endRobustness,bestAccuracy,endAccuracy,gap";
}

std::string TrainReport::csv_row() const {
  std::ostringstream os;
  os << epochs.size() << ',' << bestEpoch << ',' << num(bestRobustness) << ',' << num(endRobustness) << ','
     << num(bestAccuracy) << ',' << num(endAccuracy) << ',' << num(gap);
  return os.str();
}

// ---- training -----------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batchSize == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!(applyProbability >= 0.0 && applyProbability <= 1.0))
    throw std::invalid_argument("train: applyProbability must be in [0,1]");
  if (warmupEpochs < 0) throw std::invalid_argument("train: warmupEpochs must be >= 0");
  if (swaStart && *swaStart < 0) throw std::invalid_argument("train: swaStart must be >= 0");
  if (threads < 1) throw std::invalid_argument("train: threads must be >= 1");
  trainAttack.validate();
  trackAttack.validate();
}

TrainingDivergence::TrainingDivergence(int epoch, std::size_t batch, double loss)
    : std::runtime_error("training diverged: loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

TrainResult adversarial_train(nn::Model model, const Dataset& trainData, const Dataset& testData,
                              const Augmentation& augmentation, nn::OptimizerState opt, const TrainConfig& cfg,
                              const EpochCallback& onEpoch) {
  cfg.validate();
  TrainResult res{model, model, {}};
  if (cfg.epochs == 0) return res;
  if (trainData.empty() || testData.empty()) throw std::invalid_argument("train: empty train or test set");

  if (cfg.trackSize > 0 && cfg.trackSize < testData.size()) {
    auto order = shuffled(testData.size(), RngStream(cfg.seed, kSubsetStream));
    order.resize(cfg.trackSize);
    std::sort(order.begin(), order.end());
    res.report.trackSubset = std::move(order);
  }
  EvalOptions trackOpts;
  trackOpts.seed = mix64(cfg.seed ^ kTrackStream);
  trackOpts.threads = cfg.threads;
  trackOpts.subset = res.report.trackSubset;

  const RngStream shuffleRoot(cfg.seed, kShuffleStream);
  const RngStream augmentRoot(cfg.seed, kAugmentStream);
  const RngStream attackRoot(cfg.seed, kAttackStream);
  std::optional<nn::AveragedModel> avg;
  if (cfg.swaStart) avg.emplace(model.spec(), *cfg.swaStart);
  res.report.averaged = avg.has_value();
  double bestRobust = -1.0;

  const std::size_t n = trainData.size();
  for (int e = 0; e < cfg.epochs; ++e) {
    AttackConfig attack = cfg.trainAttack;
    if (cfg.warmupEpochs > 0) attack.epsilon = epsilon_warmup(e, cfg.warmupEpochs, cfg.trainAttack.epsilon);
    const auto order = shuffled(n, shuffleRoot.split(static_cast<std::uint64_t>(e)));
    const RngStream epochAugment = augmentRoot.split(static_cast<std::uint64_t>(e));
    const RngStream epochAttack = attackRoot.split(static_cast<std::uint64_t>(e));

    double lossSum = 0.0;
    std::size_t batchIndex = 0;
    for (std::size_t start = 0; start < n; start += cfg.batchSize, ++batchIndex) {
      const std::size_t end = std::min(n, start + cfg.batchSize);
      std::vector<Image> imgs;
      std::vector<int> labels;
      imgs.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        RngStream s = epochAugment.split(idx);
        if (s.uniform01() < cfg.applyProbability)
          imgs.push_back(augmentation(trainData.images[idx], s));
        else
          imgs.push_back(trainData.images[idx]);
        labels.push_back(trainData.labels[idx]);
      }
      const auto adv = pgd_attack(model, imgs, labels, attack, epochAttack, start, cfg.threads);
      const auto g = nn::loss_and_grads(model, adv, labels, nn::GradMode::ParamsOnly, cfg.threads);
      if (!std::isfinite(g.loss)) throw TrainingDivergence(e, batchIndex, g.loss);
      nn::sgd_step(model, g.paramGrads, opt, e);
      lossSum += g.loss * static_cast<double>(end - start);
    }

    if (avg && e >= avg->start_epoch()) avg->update(model);
    const bool useAverage = avg && avg->count() > 0;
    nn::Model tracked = useAverage ? avg->model() : model;
    const EvalResult r = evaluate(tracked, testData, cfg.trackAttack, trackOpts);

    EpochRecord rec{e, opt.lr_at(e), attack.epsilon, lossSum / static_cast<double>(n), r.cleanAccuracy,
                    r.robustAccuracy};
    res.report.epochs.push_back(rec);
    if (onEpoch) onEpoch(rec);
    if (rec.robustAccuracy > bestRobust) {
      bestRobust = rec.robustAccuracy;
      res.bestModel = tracked;
    }
    if (e + 1 == cfg.epochs) res.finalModel = std::move(tracked);
  }
  res.report.summarize();
  return res;
}

}  // namespace augat
