#include <doctest.h>

#include <cmath>

#include "tdvs/trainer.hpp"

using namespace tdvs;

namespace {

// Scalar-network fixture: one linear output pair fed by two inputs.
NetworkSpec scalar_spec() { return NetworkSpec::from_string(1, 1, "flatten,linear2"); }

ParameterSet<float> constant_params(float w, float b) {
  NetworkSpec spec = scalar_spec();
  auto params = init_parameters<float>(spec, 0);
  std::fill(params.layers[1].w.begin(), params.layers[1].w.end(), w);
  std::fill(params.layers[1].b.begin(), params.layers[1].b.end(), b);
  return params;
}

ParameterSet<float> grads_like(const ParameterSet<float>& params, float g) {
  ParameterSet<float> grads;
  grads.layers.resize(params.layers.size());
  for (size_t i = 0; i < params.layers.size(); ++i) {
    if (params.layers[i].empty()) continue;
    grads.layers[i].w_dims = params.layers[i].w_dims;
    grads.layers[i].w.assign(params.layers[i].w.size(), g);
    grads.layers[i].b.assign(params.layers[i].b.size(), g);
  }
  return grads;
}

}  // namespace

TEST_CASE("adam_step: first step moves by about the learning rate") {
  const auto spec = scalar_spec();
  auto params = constant_params(0.5f, 0.25f);
  auto state = AdamState<float>::zeros_like(spec, params);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;

  adam_step(spec, params, grads_like(params, 3.0f), state, cfg);
  // Bias correction makes m_hat = g, v_hat = g^2 on step one.
  for (float w : params.layers[1].w)
    CHECK(w == doctest::Approx(0.5 - 0.1).epsilon(1e-6));
  CHECK(state.t == 1);
}

TEST_CASE("adam_step: matches the hand-computed two-step sequence") {
  // alpha = 0.1, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, g = 1 twice,
  // starting from theta = 0.5 (sequence computed by hand):
  //   t=1: m=0.1,   v=0.001,    m_hat=1, v_hat=1,              theta=0.400000001
  //   t=2: m=0.19,  v=0.001999, m_hat=1, v_hat=1.0000000000000142, theta=0.30000000200000065
  const auto spec = scalar_spec();
  auto params = constant_params(0.5f, 0.5f);
  auto state = AdamState<float>::zeros_like(spec, params);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;

  adam_step(spec, params, grads_like(params, 1.0f), state, cfg);
  CHECK(state.m.layers[1].w[0] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(state.v.layers[1].w[0] == doctest::Approx(0.001).epsilon(1e-6));
  CHECK(params.layers[1].w[0] == doctest::Approx(0.400000001).epsilon(1e-6));

  adam_step(spec, params, grads_like(params, 1.0f), state, cfg);
  CHECK(state.m.layers[1].w[0] == doctest::Approx(0.19).epsilon(1e-6));
  CHECK(state.v.layers[1].w[0] == doctest::Approx(0.001999).epsilon(1e-6));
  CHECK(params.layers[1].w[0] == doctest::Approx(0.30000000200000065).epsilon(1e-6));
}

TEST_CASE("adam_step: zero gradients leave parameters unchanged; non-finite aborts") {
  const auto spec = scalar_spec();
  auto params = constant_params(0.7f, -0.3f);
  const auto before = params;
  auto state = AdamState<float>::zeros_like(spec, params);
  AdamConfig cfg;

  for (int i = 0; i < 25; ++i) adam_step(spec, params, grads_like(params, 0.0f), state, cfg);
  CHECK(params.layers[1].w == before.layers[1].w);
  CHECK(params.layers[1].b == before.layers[1].b);

  CHECK_THROWS_WITH_AS(
      adam_step(spec, params, grads_like(params, std::numeric_limits<float>::quiet_NaN()), state, cfg),
      doctest::Contains("non-finite"), std::runtime_error);
}

namespace {

// Synthetic linear regression task y = W x + b on random inputs.
TrainingSet linear_task(int n, std::uint64_t seed) {
  TrainingSet set;
  set.width = 1;
  set.height = 1;
  Rng rng(seed);
  const double w11 = 0.6, w12 = -0.4, w21 = 0.2, w22 = 0.9, b1 = 0.1, b2 = -0.2;
  for (int i = 0; i < n; ++i) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.uniform(-1.0, 1.0);
    const double x3 = rng.uniform(-1.0, 1.0);
    set.images.push_back(static_cast<float>(x1));
    set.images.push_back(static_cast<float>(x2));
    set.images.push_back(static_cast<float>(x3));
    set.labels.push_back({static_cast<float>(w11 * x1 + w12 * x2 + b1),
                          static_cast<float>(w21 * x1 + w22 * x3 + b2)});
  }
  return set;
}

}  // namespace

TEST_CASE("train: converges to the least-squares solution of a linear task") {
  const auto spec = scalar_spec();
  const auto data = linear_task(64, 31);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 16;
  cfg.adam.learning_rate = 0.02;
  cfg.shuffle_seed = 5;
  cfg.threads = 1;

  const auto result = train(data, spec, init_parameters<float>(spec, 8), cfg);
  REQUIRE(!result.aborted_non_finite);
  CHECK(result.log.final_loss() < 1e-6);

  // The generating weights are the least-squares optimum (noise-free data).
  const auto& w = result.params.layers[1].w;
  const auto& b = result.params.layers[1].b;
  CHECK(w[0] == doctest::Approx(0.6).epsilon(1e-3));
  CHECK(w[1] == doctest::Approx(-0.4).epsilon(1e-3));
  CHECK(std::abs(w[2]) < 1e-3);
  CHECK(w[3] == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(std::abs(w[4]) < 1e-3);
  CHECK(w[5] == doctest::Approx(0.9).epsilon(1e-3));
  CHECK(b[0] == doctest::Approx(0.1).epsilon(1e-2));
  CHECK(b[1] == doctest::Approx(-0.2).epsilon(1e-2));
}

TEST_CASE("train: determinism, zero epochs, frozen layers stay put") {
  const auto data = linear_task(32, 77);

  auto spec = NetworkSpec::from_string(1, 1, "flatten,dense4,relu,linear2");
  spec.layers[1].trainable = false;  // freeze the dense layer

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 10;  // keeps a partial final batch in play
  cfg.adam.learning_rate = 0.01;
  cfg.shuffle_seed = 9;
  cfg.threads = 2;

  const auto init = init_parameters<float>(spec, 42);

  const auto r1 = train(data, spec, init, cfg);
  const auto r2 = train(data, spec, init, cfg);
  for (size_t li = 0; li < r1.params.layers.size(); ++li) {
    CHECK(r1.params.layers[li].w == r2.params.layers[li].w);
    CHECK(r1.params.layers[li].b == r2.params.layers[li].b);
  }

  // Frozen dense layer is bit-identical to initialization; the head moved.
  CHECK(r1.params.layers[1].w == init.layers[1].w);
  CHECK(r1.params.layers[1].b == init.layers[1].b);
  CHECK(r1.params.layers[3].w != init.layers[3].w);

  TrainConfig zero = cfg;
  zero.epochs = 0;
  const auto r0 = train(data, spec, init, zero);
  for (size_t li = 0; li < r0.params.layers.size(); ++li)
    CHECK(r0.params.layers[li].w == init.layers[li].w);
  CHECK(r0.log.epochs.empty());

  CHECK_THROWS_AS(train(TrainingSet{}, spec, init, cfg), std::invalid_argument);
}
