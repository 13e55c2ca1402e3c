#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "augat/nn.hpp"
#include "oracles.hpp"

using namespace augat;
using namespace augat::nn;

namespace {

/// Per-neuron double-precision forward pass over the documented layout:
/// conv weights [ky][kx][ic][oc] then bias, dense weights [in][out] then bias.
std::vector<double> naive_forward(const Model& m, const Image& img) {
  std::vector<double> act(img.values().begin(), img.values().end());
  int h = img.height(), w = img.width(), c = img.channels();
  const auto p = m.parameters();
  std::size_t offset = 0;
  for (const LayerSpec& l : m.spec().layers) {
    if (l.type == LayerType::Relu) {
      for (double& v : act) v = std::max(v, 0.0);
      continue;
    }
    if (l.type == LayerType::Conv) {
      const int k = l.kernel, oh = (h - 1) / l.stride + 1, ow = (w - 1) / l.stride + 1, oc = l.units;
      const std::size_t bias = offset + static_cast<std::size_t>(k * k * c * oc);
      std::vector<double> out(static_cast<std::size_t>(oh * ow * oc));
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
          for (int o = 0; o < oc; ++o) {
            double sum = p[bias + static_cast<std::size_t>(o)];
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx)
                for (int i = 0; i < c; ++i) {
                  const int sy = y * l.stride + ky - k / 2, sx = x * l.stride + kx - k / 2;
                  if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                  sum += act[static_cast<std::size_t>((sy * w + sx) * c + i)] *
                         p[offset + static_cast<std::size_t>(((ky * k + kx) * c + i) * oc + o)];
                }
            out[static_cast<std::size_t>((y * ow + x) * oc + o)] = sum;
          }
      offset = bias + static_cast<std::size_t>(oc);
      act = std::move(out);
      h = oh;
      w = ow;
      c = oc;
    } else {
      const std::size_t in = act.size(), oc = static_cast<std::size_t>(l.units);
      std::vector<double> out(oc);
      for (std::size_t o = 0; o < oc; ++o) {
        double sum = p[offset + in * oc + o];
        for (std::size_t i = 0; i < in; ++i) sum += act[i] * p[offset + i * oc + o];
        out[o] = sum;
      }
      offset += in * oc + oc;
      act = std::move(out);
      h = w = 1;
      c = static_cast<int>(oc);
    }
  }
  return act;
}

Model random_model(const std::string& layers, int h, int w, int c, int k, std::uint64_t seed) {
  RngStream rng(seed, 3);
  return Model::initialized(ModelSpec::parse(layers, h, w, c, k), rng);
}

}  // namespace

TEST_CASE("layer text parsing and validation") {
  const ModelSpec s = ModelSpec::parse("conv:4:3:2,relu,dense:3", 8, 8, 3, 3);
  REQUIRE(s.layers.size() == 3);
  CHECK(s.layers[0].type == LayerType::Conv);
  CHECK(s.layers[0].units == 4);
  CHECK(s.layers[0].kernel == 3);
  CHECK(s.layers[0].stride == 2);
  CHECK(ModelSpec::parse(s.layer_text(), 8, 8, 3, 3) == s);
  CHECK(ModelSpec::from_description(s.describe()) == s);
  CHECK_THROWS_AS(ModelSpec::parse("conv:4:3:2,relu", 8, 8, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::parse("dense:4", 8, 8, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::parse("pool:2,dense:3", 8, 8, 3, 3), std::invalid_argument);
  CHECK(ModelSpec::desk_default(16, 16, 3, 2).layers.back().units == 2);
}

TEST_CASE("geometry follows same padding") {
  const Model m = random_model("conv:4:3:2,relu,conv:5:3:2,dense:2", 9, 8, 3, 2, 1);
  const auto& g = m.geometry();
  CHECK(g[0].outH == 5);
  CHECK(g[0].outW == 4);
  CHECK(g[2].outH == 3);
  CHECK(g[2].outW == 2);
  CHECK(g[0].weightCount == 3u * 3 * 3 * 4);
  CHECK(m.parameter_count() == (3u * 3 * 3 * 4 + 4) + (3u * 3 * 4 * 5 + 5) + (3u * 2 * 5 * 2 + 2));
}

TEST_CASE("zero weights give zero logits") {
  const Model m(ModelSpec::parse("conv:4:3:1,relu,dense:3", 6, 6, 3, 3));
  RngStream rng(2, 0);
  const std::vector<Image> batch{oracle::random_image(6, 6, 3, rng)};
  for (float v : forward(m, batch)) CHECK(v == 0.0f);
}

TEST_CASE("identity dense layer copies a one-hot input") {
  ModelSpec spec = ModelSpec::parse("dense:3", 1, 3, 1, 3);
  std::vector<float> params(12, 0.0f);
  for (int i = 0; i < 3; ++i) params[static_cast<std::size_t>(i * 3 + i)] = 1.0f;
  const Model m(spec, params);
  for (int hot = 0; hot < 3; ++hot) {
    Image img(1, 3, 1);
    img.at(0, hot, 0) = 1.0f;
    const std::vector<Image> batch{img};
    const auto logits = forward(m, batch);
    for (int o = 0; o < 3; ++o) CHECK(logits[static_cast<std::size_t>(o)] == (o == hot ? 1.0f : 0.0f));
  }
}

TEST_CASE("forward matches the naive per-neuron reference") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Model m = random_model("conv:4:3:1,relu,conv:6:3:2,relu,conv:3:1:1,dense:7,relu,dense:4", 9, 7, 3, 4, seed);
    RngStream rng(seed, 9);
    std::vector<Image> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(oracle::random_image(9, 7, 3, rng));
    const auto logits = forward(m, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto ref = naive_forward(m, batch[i]);
      for (std::size_t o = 0; o < 4; ++o) CHECK(logits[i * 4 + o] == doctest::Approx(ref[o]).epsilon(1e-5).scale(1));
    }
  }
}

TEST_CASE("forward rejects mismatched images") {
  const Model m = random_model("dense:2", 4, 4, 3, 2, 0);
  const std::vector<Image> bad{Image(4, 5, 3)};
  CHECK_THROWS_AS(forward(m, bad), std::invalid_argument);
}

TEST_CASE("cross entropy") {
  const std::vector<float> uniform(5, 0.3f);
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  std::vector<float> z{0.5f, 1.0f, -0.25f};
  const double before = cross_entropy(z, 1);
  z[1] *= 2;
  CHECK(cross_entropy(z, 1) < before);
  CHECK(std::isfinite(cross_entropy(std::vector<float>{1000.0f, -1000.0f}, 1)));
  CHECK(misclassified(std::vector<float>{1.0f, 1.0f}, 0));
  CHECK_FALSE(misclassified(std::vector<float>{2.0f, 1.0f}, 0));
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = oracle::gradient_check(seed);
    CAPTURE(seed);
    CHECK(r.conv < 1e-3);
    CHECK(r.dense < 1e-3);
    CHECK(r.relu < 1e-3);
  }
}

TEST_CASE("per-example losses agree with the batch loss") {
  const Model m = random_model("conv:3:3:2,relu,dense:3", 6, 6, 3, 3, 4);
  RngStream rng(4, 4);
  std::vector<Image> x;
  std::vector<int> y;
  for (int i = 0; i < 5; ++i) {
    x.push_back(oracle::random_image(6, 6, 3, rng));
    y.push_back(i % 3);
  }
  const LossGrads g = loss_and_grads(m, x, y);
  const auto each = example_losses(m, x, y);
  double sum = 0;
  for (std::size_t i = 0; i < each.size(); ++i) {
    CHECK(each[i] == doctest::Approx(g.perExampleLoss[i]).epsilon(1e-12));
    sum += each[i];
  }
  CHECK(g.loss == doctest::Approx(sum / 5).epsilon(1e-12));
}

TEST_CASE("thread count does not change the loss") {
  const Model m = random_model("conv:3:3:2,relu,dense:3", 6, 6, 3, 3, 5);
  RngStream rng(5, 5);
  std::vector<Image> x;
  std::vector<int> y;
  for (int i = 0; i < 9; ++i) {
    x.push_back(oracle::random_image(6, 6, 3, rng));
    y.push_back(i % 3);
  }
  const LossGrads one = loss_and_grads(m, x, y, GradMode::Both, 1);
  const LossGrads three = loss_and_grads(m, x, y, GradMode::Both, 3);
  CHECK(one.perExampleLoss == three.perExampleLoss);
  CHECK(one.inputGrads == three.inputGrads);
  CHECK(oracle::relative_error(std::vector<double>(one.paramGrads.begin(), one.paramGrads.end()),
                               std::vector<double>(three.paramGrads.begin(), three.paramGrads.end())) < 1e-6);
}

TEST_CASE("plain SGD without momentum or decay") {
  Model m = random_model("dense:2", 1, 2, 1, 2, 6);
  const std::vector<float> before(m.parameters().begin(), m.parameters().end());
  std::vector<float> grads(before.size());
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = 0.1f * static_cast<float>(i) - 0.2f;
  OptimizerState opt;
  opt.learningRate = 0.05;
  opt.momentum = 0;
  opt.weightDecay = 0;
  sgd_step(m, grads, opt, 0);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(m.parameters()[i] == before[i] - 0.05f * grads[i]);
}

TEST_CASE("momentum and weight decay update") {
  Model m = random_model("dense:2", 1, 2, 1, 2, 7);
  std::vector<float> theta(m.parameters().begin(), m.parameters().end());
  const std::vector<float> grads(theta.size(), 0.5f);
  OptimizerState opt;
  opt.learningRate = 0.1;
  opt.momentum = 0.9;
  opt.weightDecay = 0.01;
  std::vector<float> v(theta.size(), 0.0f);
  for (int step = 0; step < 3; ++step) {
    sgd_step(m, grads, opt, 0);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = 0.9f * v[i] + (grads[i] + 0.01f * theta[i]);
      theta[i] = theta[i] - 0.1f * v[i];
      CHECK(m.parameters()[i] == doctest::Approx(theta[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("step learning-rate schedule") {
  OptimizerState opt;
  opt.learningRate = 0.1;
  opt.schedule = {{100, 0.1}, {150, 0.1}};
  CHECK(opt.lr_at(0) == 0.1);
  CHECK(opt.lr_at(99) == 0.1);
  CHECK(opt.lr_at(100) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(opt.lr_at(149) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(opt.lr_at(150) == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("SGD on a quadratic bowl shrinks the parameter norm") {
  // Loss 0.5 * |theta|^2 has gradient theta; with lr 0.1 and no momentum the
  // norm contracts by exactly 0.9 per step.
  Model m = random_model("dense:2", 1, 3, 1, 2, 8);
  OptimizerState opt;
  opt.learningRate = 0.1;
  opt.momentum = 0;
  opt.weightDecay = 0;
  auto norm = [&] {
    double s = 0;
    for (float p : m.parameters()) s += static_cast<double>(p) * p;
    return std::sqrt(s);
  };
  const double start = norm();
  double prev = start;
  for (int step = 1; step <= 50; ++step) {
    const std::vector<float> g(m.parameters().begin(), m.parameters().end());
    sgd_step(m, g, opt, 0);
    const double now = norm();
    CHECK(now < prev);
    CHECK(now <= start * std::pow(0.9, step) * (1 + 1e-5));
    prev = now;
  }
}

TEST_CASE("weight averaging") {
  const ModelSpec spec = ModelSpec::parse("dense:2", 1, 3, 1, 2);
  RngStream rng(9, 0);
  const Model a = Model::initialized(spec, rng);
  AveragedModel one(spec);
  one.update(a);
  const Model single = one.model();
  CHECK(std::equal(single.parameters().begin(), single.parameters().end(), a.parameters().begin()));

  std::vector<float> neg(a.parameters().begin(), a.parameters().end());
  for (float& v : neg) v = -v;
  AveragedModel sym(spec);
  sym.update(a);
  sym.update(Model(spec, neg));
  const Model zero = sym.model();
  for (float v : zero.parameters()) CHECK(v == 0.0f);

  AveragedModel five(spec);
  std::vector<double> mean(a.parameter_count(), 0.0);
  for (int i = 0; i < 5; ++i) {
    const Model s = Model::initialized(spec, rng);
    five = swa_update(five, s);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += s.parameters()[k] / 5.0;
  }
  CHECK(five.count() == 5);
  for (std::size_t k = 0; k < mean.size(); ++k) CHECK(five.mean()[k] == doctest::Approx(mean[k]).epsilon(1e-6).scale(1));

  AveragedModel other(ModelSpec::parse("dense:2", 1, 4, 1, 2));
  CHECK_THROWS_AS(other.update(a), std::invalid_argument);
}

TEST_CASE("checkpoint round trip and corruption") {
  const Model m = random_model("conv:3:3:2,relu,dense:2", 6, 6, 3, 2, 10);
  std::stringstream buf;
  save_checkpoint(buf, m, "{\"role\":\"best\"}");
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "AUGATCKP");

  std::istringstream in(bytes);
  const Checkpoint ck = load_checkpoint(in);
  CHECK(ck.metadata == "{\"role\":\"best\"}");
  CHECK(ck.model.spec() == m.spec());
  CHECK(std::equal(ck.model.parameters().begin(), ck.model.parameters().end(), m.parameters().begin()));

  std::string badMagic = bytes;
  badMagic[0] = 'X';
  std::istringstream a(badMagic);
  CHECK_THROWS_AS(load_checkpoint(a), std::runtime_error);
  std::string badVersion = bytes;
  badVersion[8] = 9;
  std::istringstream b(badVersion);
  CHECK_THROWS_AS(load_checkpoint(b), std::runtime_error);
  std::string badPrint = bytes;
  badPrint[12] ^= 1;
  std::istringstream c(badPrint);
  CHECK_THROWS_AS(load_checkpoint(c), std::runtime_error);
  std::istringstream d(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(d), std::runtime_error);
}
