// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "augat/advtrain.hpp"
#include "augat/cli.hpp"
#include "augat/cropshift.hpp"
#include "augat/dataset_io.hpp"
#include "augat/idbh.hpp"
#include "augat/transforms.hpp"
#include "oracles.hpp"

using namespace augat;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- 1. composition uniformity --------------------------------------------------------------

Verdict composition_uniformity() {
  const auto start = Clock::now();
  std::map<std::tuple<int, int, int, int>, std::size_t> index;
  for (int l = 0; l <= 4; ++l)
    for (int r = 0; r <= 4; ++r)
      for (int t = 0; t <= 4; ++t)
        for (int b = 0; b <= 4; ++b)
          if (l + r + t + b == 4) index.emplace(std::tuple{l, r, t, b}, index.size());
  std::vector<long> counts(index.size(), 0);
  RngStream rng(2024, 1);
  for (int i = 0; i < 100000; ++i) {
    const Composition c = sample_composition(4, rng);
    counts[index.at({c.left, c.right, c.top, c.bottom})]++;
  }
  const double p = oracle::chi_square_p(counts);
  const double t = seconds_since(start);
  return {index.size() == 35 && p > 0.001 && t < 10.0,
          fmt("compositions=%zu p=%.4f time=%.2fs", index.size(), p, t)};
}

// ---- 2. pixel conservation ------------------------------------------------------------------

Verdict pixel_conservation() {
  RngStream rng(2024, 2);
  long mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const int h = static_cast<int>(rng.uniform_int(9, 32)), w = static_cast<int>(rng.uniform_int(9, 32));
    const Image img = oracle::random_image(h, w, i % 2 ? 3 : 1, rng);
    const CropshiftParams p = sample_cropshift(h, w, static_cast<int>(rng.uniform_int(0, 8)), rng);
    const Image out = cropshift_fixed(img, p, uniform_fill(img.channels(), -1.0f));
    const int ch = h - p.removed.top - p.removed.bottom, cw = w - p.removed.left - p.removed.right;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const bool inside = y >= p.shiftY && y < p.shiftY + ch && x >= p.shiftX && x < p.shiftX + cw;
        for (int c = 0; c < img.channels(); ++c) {
          const float want = inside ? img.at(y - p.shiftY + p.removed.top, x - p.shiftX + p.removed.left, c) : -1.0f;
          mismatches += out.at(y, x, c) != want;
        }
      }
  }
  const Image img = oracle::random_image(32, 32, 3, rng);
  const bool identity = bit_equal(cropshift(img, 0, rng, uniform_fill(3)), img);
  return {mismatches == 0 && identity, fmt("mismatches=%ld identityN0=%d", mismatches, identity)};
}

// ---- 3. search-space cardinality ----------------------------------------------------------------

Verdict search_space_cardinality() {
  const SearchSpace space = SearchSpace::reduced_default();
  const auto schedules = enumerate_search_space(space);
  const bool shape = space.crop.size() == 8 && space.colorShape.size() == 2 && space.dropout.size() == 5;
  return {schedules.size() == 80 && shape,
          fmt("schedules=%zu (%zux%zux%zu)", schedules.size(), space.crop.size(), space.colorShape.size(),
              space.dropout.size())};
}

// ---- 4. PGD soundness ---------------------------------------------------------------------------

Verdict pgd_soundness() {
  const double eps = 8.0 / 255.0;
  RngStream rng(2024, 4);
  const nn::Model model =
      nn::Model::initialized(nn::ModelSpec::parse("conv:4:3:2,relu,dense:10", 8, 8, 3, 10), rng);
  long attacked = 0, violations = 0;
  for (int steps : {10, 50}) {
    AttackConfig cfg = AttackConfig::pgd(steps);
    for (int batch = 0; batch < 25; ++batch) {
      std::vector<Image> x;
      std::vector<int> y;
      for (int i = 0; i < 200; ++i) {
        x.push_back(oracle::random_image(8, 8, 3, rng));
        y.push_back(static_cast<int>(rng.uniform_int(0, 9)));
      }
      const auto adv = pgd_attack(model, x, y, cfg, RngStream(2024, 40 + static_cast<std::uint64_t>(steps)),
                                  static_cast<std::uint64_t>(batch) * 200);
      for (std::size_t i = 0; i < x.size(); ++i) {
        ++attacked;
        const std::span<const float> a = adv[i].data(), o = x[i].data();
        bool ok = true;
        for (std::size_t j = 0; j < a.size(); ++j)
          ok = ok && std::abs(static_cast<double>(a[j]) - o[j]) <= eps + 1e-6 && a[j] >= 0.0f && a[j] <= 1.0f;
        violations += !ok;
      }
    }
  }

  // Hand-built linear-softmax model: logits = W x + b with W[j][k] = sin(j + 3k).
  nn::Model linear(nn::ModelSpec::parse("dense:3", 4, 4, 3, 3));
  const std::size_t in = 48;
  auto p = linear.parameters();
  for (std::size_t j = 0; j < in; ++j)
    for (std::size_t k = 0; k < 3; ++k) p[j * 3 + k] = static_cast<float>(0.1 * std::sin(static_cast<double>(j + 3 * k)));
  for (std::size_t k = 0; k < 3; ++k) p[in * 3 + k] = static_cast<float>(0.05 * static_cast<double>(k));
  std::vector<Image> x;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(oracle::random_image(4, 4, 3, rng));
    y.push_back(i % 3);
  }
  AttackConfig fgsm;
  fgsm.steps = 1;
  fgsm.init = AttackInit::Zero;
  fgsm.epsilon = fgsm.stepSize = eps;
  const auto adv = pgd_attack(linear, x, y, fgsm, RngStream(2024, 41));
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto xi = x[i].data();
    std::vector<double> z(3);
    for (std::size_t k = 0; k < 3; ++k) {
      z[k] = p[in * 3 + k];
      for (std::size_t j = 0; j < in; ++j) z[k] += static_cast<double>(p[j * 3 + k]) * xi[j];
    }
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) s += (v = std::exp(v - m));
    for (double& v : z) v /= s;
    z[static_cast<std::size_t>(y[i])] -= 1.0;
    for (std::size_t j = 0; j < in; ++j) {
      double g = 0.0;
      for (std::size_t k = 0; k < 3; ++k) g += static_cast<double>(p[j * 3 + k]) * z[k];
      const double want = std::clamp(xi[j] + (g > 0 ? eps : g < 0 ? -eps : 0.0), 0.0, 1.0);
      worst = std::max(worst, std::abs(adv[i].data()[j] - want));
    }
  }
  return {violations == 0 && attacked == 10000 && worst <= 1e-6,
          fmt("attacked=%ld violations=%ld fgsmMaxErr=%.2e", attacked, violations, worst)};
}

// ---- 5. gradients ---------------------------------------------------------------------------------

Verdict gradients() {
  const auto start = Clock::now();
  double conv = 0.0, dense = 0.0, relu = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const oracle::GradientCheck g = oracle::gradient_check(seed);
    conv = std::max(conv, g.conv);
    dense = std::max(dense, g.dense);
    relu = std::max(relu, g.relu);
  }
  const double t = seconds_since(start);
  return {conv < 1e-3 && dense < 1e-3 && relu < 1e-3 && t < 60.0,
          fmt("maxRelErr conv=%.2e dense=%.2e relu=%.2e time=%.1fs", conv, dense, relu, t)};
}

// ---- 6. hardness --------------------------------------------------------------------------------

Verdict hardness() {
  SyntheticSpec s;
  s.count = 300;
  s.margin = 0.5;
  s.seed = 6;
  const Dataset train = make_synthetic(s, 0), test = make_synthetic(s, 1);
  RngStream rng(2024, 6);
  const nn::Model init = nn::Model::initialized(nn::ModelSpec::parse("conv:8:3:2,relu,dense:2", 16, 16, 3, 2), rng);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batchSize = 32;
  tc.trainAttack = tc.trackAttack = AttackConfig::pgd(3);
  tc.trackSize = 50;
  nn::OptimizerState opt;
  opt.learningRate = 0.02;
  const nn::Model model = adversarial_train(init, train, test, identity_augmentation(), opt, tc).finalModel;
  const HardnessReport id = measure_hardness(model, test, identity_augmentation(), AttackConfig::pgd(10));

  // Robustness falls linearly with strength.
  const double base = 0.6;
  cli::CalibrationRequest req;
  req.kinds = {TransformKind::ShearX};
  req.tolerance = 0.005 * base / kHardnessDegrees.back();
  const cli::CalibrationOutcome out =
      cli::calibrate_hardness(req, base, [&](TransformKind, double v) { return base - 0.5 * v; }, 32, 32);
  int within = 0, maxIter = 0;
  for (const auto& e : out.entries) {
    const double target = base / e.nominalHardness;
    within += e.search.reachable && std::abs(e.search.achieved - target) <= 0.005 * target;
    maxIter = std::max(maxIter, e.search.iterations);
  }
  const bool pass = id.baseRobustness > 0.0 && id.hardness == 1.0 && within == 7 && maxIter < 20;
  return {pass, fmt("identity base=%.3f hardness=%.6f; levels within 0.5%%=%d/7 maxIterations=%d", id.baseRobustness,
                    id.hardness, within, maxIter)};
}

// ---- 7. robust overfitting direction ------------------------------------------------------------------

struct OverfitRun {
  double gap;
  double end;
  double best;
};

OverfitRun overfit_run(std::uint64_t seed, bool idbh) {
  SyntheticSpec s;
  s.height = s.width = 16;
  s.margin = 0.3;
  s.noise = 0.15;
  s.seed = seed;
  s.count = 1000;
  const Dataset test = make_synthetic(s, 1);
  s.count = 2000;
  s.labelNoise = 0.15;
  const Dataset train = make_synthetic(s, 0);

  RngStream rng(seed, 7);
  const nn::Model init = nn::Model::initialized(
      nn::ModelSpec::parse("conv:16:3:2,relu,conv:32:3:2,relu,dense:64,relu,dense:2", 16, 16, 3, 2), rng);
  nn::OptimizerState opt;
  opt.learningRate = 0.02;
  opt.schedule = {{20, 0.1}, {30, 0.1}};
  TrainConfig tc;
  tc.epochs = 40;
  tc.batchSize = 32;
  tc.trainAttack = AttackConfig::pgd(5);
  tc.trainAttack.stepSize = 2.0 / 255.0;
  tc.trackAttack = AttackConfig::pgd(10);
  tc.warmupEpochs = 10;
  tc.trackSize = 500;
  tc.seed = seed;

  Augmentation aug = identity_augmentation();
  if (idbh) {
    IdbhSchedule sch;
    sch.pFlip = 0.5;
    sch.pCrop = 0.5;
    sch.cropStrength = {0, 8};
    sch.pDropout = 0.5;
    sch.dropoutArea = {0.02, 0.33};
    sch.fill = uniform_fill(3);
    aug = idbh_augmentation(sch);
  }
  const TrainReport r = adversarial_train(init, train, test, aug, opt, tc).report;
  return {r.gap, r.endRobustness, r.bestRobustness};
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

Verdict robust_overfitting() {
  const auto start = Clock::now();
  std::vector<double> gapNone, gapIdbh, endNone, endIdbh;
  std::ostringstream runs;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (bool idbh : {false, true}) {
      const OverfitRun r = overfit_run(seed, idbh);
      (idbh ? gapIdbh : gapNone).push_back(r.gap);
      (idbh ? endIdbh : endNone).push_back(r.end);
      runs << (idbh ? " idbh" : " none") << seed << "(best=" << r.best << ",end=" << r.end << ")";
      std::cerr << "  [7] seed " << seed << (idbh ? " idbh" : " none") << " best " << r.best << " end " << r.end
                << " gap " << r.gap << " after " << static_cast<int>(seconds_since(start)) << "s\n";
    }
  }
  const double gn = median3(gapNone), gi = median3(gapIdbh), en = median3(endNone), ei = median3(endIdbh);
  const double t = seconds_since(start);
  const bool pass = gi < gn && ei >= en && t < 1800.0;
  return {pass, fmt("median gap none=%.4f idbh=%.4f; median end none=%.4f idbh=%.4f; time=%.0fs;", gn, gi, en, ei,
                    t) + runs.str()};
}

// ---- 8. histogram ops ---------------------------------------------------------------------------

Verdict histogram_ops() {
  RngStream rng(2024, 8);
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    const int h = static_cast<int>(rng.uniform_int(4, 24)), w = static_cast<int>(rng.uniform_int(4, 24));
    Image img = i % 2 ? oracle::random_image(h, w, 3, rng) : oracle::random_image_8bit(h, w, i % 4 ? 3 : 1, rng);
    equal += bit_equal(equalize(img), oracle::naive_equalize(img)) &&
             bit_equal(autocontrast(img), oracle::naive_autocontrast(img));
  }
  return {equal == 100, fmt("bit-exact=%d/100", equal)};
}

// ---- 9. epsilon warmup ----------------------------------------------------------------------------

Verdict warmup() {
  const double target = 8.0 / 255.0;
  int exact = 0;
  for (int e = 0; e <= 6; ++e) {
    const double want = e + 1 >= 5 ? target : target * static_cast<double>(e + 1) / 5.0;
    exact += epsilon_warmup(e, 5, target) == want;
  }
  const bool plateau = epsilon_warmup(5, 5, target) == target && epsilon_warmup(6, 5, target) == target;
  return {exact == 7 && plateau, fmt("exact=%d/7 plateau=%d", exact, plateau)};
}

// ---- 10. determinism --------------------------------------------------------------------------------

Verdict determinism() {
  const fs::path dir = oracle::scratch_dir("acceptance-det");
  std::vector<std::string> files{"report.json", "report.csv", "curve.csv", "best.ckpt", "end.ckpt"};
  for (const char* run : {"a", "b"}) {
    cli::Overrides o;
    o.output = (dir / run).string();
    o.threads = 1;
    std::ostringstream log;
    if (cli::cmd_train(cli::parse_run_config(cli::load_json_file("configs/smoke.json"), o), log) != 0)
      return {false, "train failed"};
  }
  int same = 0;
  for (const auto& f : files) same += !slurp(dir / "a" / f).empty() && slurp(dir / "a" / f) == slurp(dir / "b" / f);
  fs::remove_all(dir);
  return {same == static_cast<int>(files.size()), fmt("identical files=%d/%zu", same, files.size())};
}

// ---- 11. CIFAR round trip -----------------------------------------------------------------------------

Verdict cifar_round_trip() {
  RngStream rng(2024, 11);
  std::vector<std::uint8_t> bytes;
  for (int r = 0; r < 50; ++r) {
    bytes.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 9)));
    for (std::size_t i = 0; i < kCifarRecord - 1; ++i) bytes.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
  }
  const bool exact = serialize_cifar_binary(parse_cifar_binary(bytes)) == bytes;
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(3 * kCifarRecord + 517));
  std::int64_t offset = -1;
  try {
    parse_cifar_binary(cut);
  } catch (const DataError& e) {
    offset = e.offset();
  }
  const auto want = static_cast<std::int64_t>(3 * kCifarRecord + 517);
  return {exact && offset == want, fmt("roundTrip=%d truncatedOffset=%lld expected=%lld", exact,
                                       static_cast<long long>(offset), static_cast<long long>(want))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"cropshift composition uniformity", composition_uniformity},
      {"cropshift pixel conservation", pixel_conservation},
      {"search-space cardinality", search_space_cardinality},
      {"PGD soundness", pgd_soundness},
      {"gradient correctness", gradients},
      {"hardness metric sanity", hardness},
      {"desk-scale robust overfitting direction", robust_overfitting},
      {"histogram-op oracle equivalence", histogram_ops},
      {"epsilon warmup schedule", warmup},
      {"determinism", determinism},
      {"CIFAR-10 binary round trip", cifar_round_trip},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << ": " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
