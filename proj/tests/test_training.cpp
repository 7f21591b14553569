#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "finer/training.hpp"

using namespace finer;

namespace {

// Plain scalar Adam recursion in long double.
struct ScalarAdam {
  long double m = 0, v = 0, theta;
  explicit ScalarAdam(long double t0) : theta(t0) {}
  void step(long double g, int t, long double lr) {
    m = 0.9L * m + 0.1L * g;
    v = 0.999L * v + 0.001L * g * g;
    const long double mh = m / (1 - std::pow(0.9L, t)), vh = v / (1 - std::pow(0.999L, t));
    theta -= lr * mh / (std::sqrt(vh) + 1e-8L);
  }
};

NetworkState sine_net(std::vector<std::size_t> dims, double omega0, double k, std::uint64_t seed) {
  ActivationSpec a;
  a.backbone = Backbone::Sine;
  a.finer = true;
  a.omega0 = omega0;
  InitScheme s;
  s.k_bias = k;
  Rng rng(seed);
  return init_network(dims, a, s, rng);
}

struct Signal {
  Matrix x, y;
};

Signal sine_signal(std::size_t n) {
  Signal s{Matrix(n, 1), Matrix(n, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    s.x(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    s.y(i, 0) = std::sin(2.0 * std::numbers::pi * s.x(i, 0));
  }
  return s;
}

}  // namespace

TEST_CASE("adam_step: zero gradient leaves parameters alone") {
  Vector p{1.0, -2.0, 3.0}, g(3, 0.0), m(3, 0.0), v(3, 0.0);
  const Vector p0 = p;
  adam_step(p, g, m, v, 1, TrainConfig{});
  CHECK(p == p0);
  CHECK(m == Vector(3, 0.0));
}

TEST_CASE("adam_step: first step is about -lr * sign(g)") {
  TrainConfig cfg;
  cfg.lr = 1e-3;
  Vector p{0.0}, g{1.0}, m{0.0}, v{0.0};
  adam_step(p, g, m, v, 1, cfg);
  CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  Vector q{0.0}, h{-4.0}, m2{0.0}, v2{0.0};
  adam_step(q, h, m2, v2, 1, cfg);
  CHECK(q[0] == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam_step: matches the scalar recursion on theta^2") {
  TrainConfig cfg;
  cfg.lr = 0.1;
  Vector p{1.0}, m{0.0}, v{0.0};
  ScalarAdam ref(1.0L);
  for (int t = 1; t <= 5; ++t) {
    Vector g{2.0 * p[0]};
    ref.step(2.0L * static_cast<long double>(p[0]), t, 0.1L);
    adam_step(p, g, m, v, static_cast<std::size_t>(t), cfg);
    CHECK(p[0] == doctest::Approx(static_cast<double>(ref.theta)).epsilon(1e-13));
  }
  CHECK(std::abs(p[0]) < 1.0);
}

TEST_CASE("adam_step: masked entries and moments stay put") {
  TrainConfig cfg;
  Vector p{1.0, 1.0}, g{0.5, 0.5}, m{0.0, 0.0}, v{0.0, 0.0};
  const std::vector<std::uint8_t> mask{1, 0};
  for (std::size_t t = 1; t <= 10; ++t) adam_step(p, g, m, v, t, cfg, cfg.lr, mask);
  CHECK(p[0] == 1.0);
  CHECK(m[0] == 0.0);
  CHECK(v[0] == 0.0);
  CHECK(p[1] < 1.0);
}

TEST_CASE("adam_step: errors") {
  Vector p(2), g(3), m(2), v(2);
  CHECK_THROWS_AS(adam_step(p, g, m, v, 1, TrainConfig{}), std::invalid_argument);
  Vector g2(2);
  CHECK_THROWS_AS(adam_step(p, g2, m, v, 0, TrainConfig{}), std::invalid_argument);
  TrainConfig bad;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("l2_loss: values, gradient and shape check") {
  const Matrix a{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(l2_loss(a, a).loss == 0.0);
  Matrix b = a;
  for (double& x : b.values()) x += 0.25;
  CHECK(l2_loss(b, a).loss == doctest::Approx(0.0625).epsilon(1e-15));

  const Matrix t{{0.3, -0.1}, {0.7, 0.2}};
  const auto r = l2_loss(a, t);
  const double h = 1e-6;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Matrix up = a, down = a;
    up.values()[i] += h;
    down.values()[i] -= h;
    const double fd = (l2_loss(up, t).loss - l2_loss(down, t).loss) / (2 * h);
    CHECK(std::abs(fd - r.grad.values()[i]) < 1e-8);
  }
  CHECK_THROWS_AS(l2_loss(a, Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("fit: zero iterations and a full freeze leave the net unchanged") {
  const auto net = sine_net({1, 16, 16, 1}, 5.0, 1.0, 3);
  const auto sig = sine_signal(32);
  FullBatchSampler sampler(sig.x, sig.y);
  TrainConfig cfg;
  cfg.iterations = 0;
  auto r = fit(net, sampler, cfg);
  CHECK(r.net == net);
  CHECK(r.log.empty());

  cfg.iterations = 25;
  cfg.log_every = 10;
  r = fit(net, sampler, cfg, FreezeMask::all(net));
  CHECK(r.net == net);
  REQUIRE(r.log.size() == 3);
  CHECK(r.log[0].iteration == 10);
  CHECK(r.log[2].iteration == 25);
}

TEST_CASE("fit: deterministic and sampler-seeded") {
  const auto net = sine_net({1, 16, 16, 1}, 5.0, 1.0, 4);
  const auto sig = sine_signal(64);
  TrainConfig cfg;
  cfg.iterations = 30;
  cfg.lr = 1e-3;
  MinibatchSampler s1(sig.x, sig.y, 8, 11), s2(sig.x, sig.y, 8, 11), s3(sig.x, sig.y, 8, 12);
  const auto a = fit(net, s1, cfg), b = fit(net, s2, cfg), c = fit(net, s3, cfg);
  CHECK(a.net == b.net);
  CHECK(log_csv(a.log) == log_csv(b.log));
  CHECK_FALSE(a.net == c.net);
}

TEST_CASE("fit: non-finite loss names the iteration") {
  auto net = sine_net({1, 4, 1}, 1.0, 1.0, 5);
  Matrix x(2, 1, 0.5), y(2, 1, 0.0);
  y(0, 0) = INFINITY;
  FullBatchSampler s(x, y);
  TrainConfig cfg;
  cfg.iterations = 3;
  try {
    fit(net, s, cfg);
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
  }
}

TEST_CASE("fit: sin(2 pi x) smoke run reaches MSE below 1e-4 with a falling loss") {
  const auto net = sine_net({1, 64, 64, 64, 1}, 1.0, 1.0, 6);
  const auto sig = sine_signal(256);
  FullBatchSampler sampler(sig.x, sig.y);
  TrainConfig cfg;
  cfg.iterations = 2000;
  cfg.lr = 5e-4;
  cfg.log_every = 1;
  const auto r = fit(net, sampler, cfg);
  const double mse = l2_loss(forward(r.net, sig.x), sig.y).loss;
  MESSAGE("final MSE " << mse);
  CHECK(mse < 1e-4);
  REQUIRE(r.log.size() == 2000);
  double prev = INFINITY;
  for (std::size_t w = 0; w < 4; ++w) {
    double s = 0.0;
    for (std::size_t i = 0; i < 500; ++i) s += r.log[w * 500 + i].loss;
    CHECK(s / 500.0 <= prev);
    prev = s / 500.0;
  }
}

TEST_CASE("lr schedule") {
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.iterations = 101;
  CHECK(cfg.lr_at(1) == cfg.lr);
  CHECK(cfg.lr_at(101) == cfg.lr);
  cfg.lr_final_fraction = 0.01;
  CHECK(cfg.lr_at(1) == doctest::Approx(1e-3));
  CHECK(cfg.lr_at(51) == doctest::Approx(1e-4));
  CHECK(cfg.lr_at(101) == doctest::Approx(1e-5));
}

TEST_CASE("stream_fit: one stage equals fit") {
  const auto net = sine_net({1, 16, 16, 1}, 5.0, 1.0, 7);
  const auto sig = sine_signal(64);
  TrainConfig cfg;
  cfg.iterations = 40;
  cfg.log_every = 10;
  cfg.lr = 1e-3;
  FullBatchSampler s1(sig.x, sig.y), s2(sig.x, sig.y);
  const auto direct = fit(net, s1, cfg);
  const auto streamed = stream_fit(net, {{16, 40, std::nullopt}}, s2, cfg, InitScheme{});
  CHECK(streamed.net == direct.net);
  REQUIRE(streamed.stages.size() == 1);
  CHECK(log_csv(streamed.stages[0].log) == log_csv(direct.log));
}

TEST_CASE("stream_fit: earlier parameters are frozen across later stages") {
  const auto net = sine_net({2, 8, 8, 1}, 5.0, 1.0, 8);
  Matrix x(50, 2), y(50, 1);
  Rng rng(1);
  for (std::size_t i = 0; i < 50; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = rng.uniform(-1, 1);
    y(i, 0) = std::sin(3 * x(i, 0)) * std::cos(2 * x(i, 1));
  }
  FullBatchSampler s(x, y);
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.lr = 1e-3;
  InitScheme scheme;
  const auto r = stream_fit(net, {{8, 20, std::nullopt}, {12, 20, BiasRing{}}, {16, 20, BiasRing{}}}, s, cfg, scheme);
  REQUIRE(r.stages.size() == 3);
  for (std::size_t st = 1; st < 3; ++st) {
    const auto& before = r.stages[st - 1].net;
    const auto& after = r.stages[st].net;
    for (std::size_t l = 0; l < before.num_layers(); ++l) {
      for (std::size_t i = 0; i < before.weights[l].rows(); ++i)
        for (std::size_t j = 0; j < before.weights[l].cols(); ++j)
          REQUIRE(after.weights[l](i, j) == before.weights[l](i, j));
      for (std::size_t i = 0; i < before.biases[l].size(); ++i) REQUIRE(after.biases[l][i] == before.biases[l][i]);
    }
    CHECK(decode_at_width(r.net, before.layer_dims[1], x) == forward(before, x));
  }
  CHECK(r.net.stage_widths == std::vector<std::size_t>{8, 12, 16});
  CHECK_THROWS_AS(stream_fit(net, {{8, 5, std::nullopt}, {8, 5, std::nullopt}}, s, cfg, scheme), std::invalid_argument);
  CHECK_THROWS_AS(stream_fit(net, {{12, 5, std::nullopt}}, s, cfg, scheme), std::invalid_argument);
}

TEST_CASE("FreezeMask shapes") {
  const auto a = sine_net({2, 4, 4, 1}, 1.0, 1.0, 9);
  Rng rng(2);
  const auto b = widen(a, 6, InitScheme{}, rng);
  const auto m = FreezeMask::existing(a, b);
  CHECK(m.matches(b));
  CHECK_FALSE(m.matches(a));
  CHECK(m.weights[1][0] == 1);
  CHECK(m.weights[1][4] == 0);
  CHECK(m.weights[1][4 * 6] == 0);
  CHECK(m.biases[0][3] == 1);
  CHECK(m.biases[0][4] == 0);
}
