#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "finer/tasks.hpp"

using namespace finer;

namespace {

constexpr double kPi = std::numbers::pi;

struct SurfaceCase {
  AnalyticSdf sdf;
  std::vector<std::array<double, 3>> surface;
};

double dist(const std::array<double, 3>& a, double x, double y, double z) {
  return std::hypot(a[0] - x, a[1] - y, a[2] - z);
}

std::vector<std::array<double, 3>> sphere_points(double r, Rng& rng, std::size_t n) {
  std::vector<std::array<double, 3>> pts;
  while (pts.size() < n) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), z = rng.uniform(-1, 1);
    const double l = std::sqrt(x * x + y * y + z * z);
    if (l < 1e-3 || l > 1) continue;
    pts.push_back({r * x / l, r * y / l, r * z / l});
  }
  return pts;
}

std::vector<std::array<double, 3>> box_points(double hx, double hy, double hz, Rng& rng, std::size_t n) {
  std::vector<std::array<double, 3>> pts;
  const double h[3] = {hx, hy, hz};
  for (std::size_t i = 0; i < n; ++i) {
    const int face = static_cast<int>(i % 6), axis = face / 2;
    std::array<double, 3> p;
    for (int a = 0; a < 3; ++a) p[a] = rng.uniform(-h[a], h[a]);
    p[axis] = face % 2 ? h[axis] : -h[axis];
    pts.push_back(p);
  }
  return pts;
}

std::vector<std::array<double, 3>> torus_points(double big, double small, Rng& rng, std::size_t n) {
  std::vector<std::array<double, 3>> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform(0, 2 * kPi), v = rng.uniform(0, 2 * kPi);
    pts.push_back({(big + small * std::cos(v)) * std::cos(u), (big + small * std::cos(v)) * std::sin(u),
                   small * std::sin(v)});
  }
  return pts;
}

ActivationSpec spec(Backbone b, bool finer, double omega0, double s0 = 1.0) {
  ActivationSpec a;
  a.backbone = b;
  a.finer = finer;
  a.omega0 = omega0;
  a.s0 = s0;
  return a;
}

}  // namespace

TEST_CASE("coord_grid") {
  const Matrix g1 = coord_grid({2});
  CHECK(g1 == Matrix{{-0.5}, {0.5}});
  const Matrix g2 = coord_grid({4, 4});
  REQUIRE(g2.rows() == 16);
  CHECK(g2(0, 0) == -0.75);
  CHECK(g2(0, 1) == -0.75);
  CHECK(g2(1, 0) == -0.75);
  CHECK(g2(1, 1) == -0.25);
  const Matrix g3 = coord_grid({3, 5, 7});
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0;
    for (std::size_t i = 0; i < g3.rows(); ++i) s += g3(i, c);
    CHECK(std::abs(s / g3.rows()) < 1e-12);
  }
  CHECK_THROWS_AS(coord_grid({}), std::invalid_argument);
  CHECK_THROWS_AS(coord_grid({3, 0}), std::invalid_argument);
}

TEST_CASE("forward_chunked equals forward") {
  Rng rng(1);
  const auto net = init_network({2, 16, 3}, spec(Backbone::Sine, true, 10), InitScheme{}, rng);
  const Matrix x = coord_grid({37, 29});
  CHECK(forward_chunked(net, x, 100) == forward(net, x));
}

TEST_CASE("AnalyticSdf: exact distances against sampled surfaces") {
  Rng rng(2);
  const std::size_t n = 10000;
  std::vector<SurfaceCase> cases{{AnalyticSdf::sphere(0.5), sphere_points(0.5, rng, n)},
                                 {AnalyticSdf::box(0.3, 0.4, 0.5), box_points(0.3, 0.4, 0.5, rng, n)},
                                 {AnalyticSdf::torus(0.5, 0.2), torus_points(0.5, 0.2, rng, n)}};
  for (const auto& c : cases) {
    INFO(c.sdf.name());
    for (const auto& p : c.surface) REQUIRE(std::abs(c.sdf(p[0], p[1], p[2])) < 1e-12);
    double worst_gap = 0;
    for (int q = 0; q < 200; ++q) {
      const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), z = rng.uniform(-1, 1);
      double nearest = INFINITY;
      for (const auto& p : c.surface) nearest = std::min(nearest, dist(p, x, y, z));
      const double d = std::abs(c.sdf(x, y, z));
      // never farther than any surface point, and close to the nearest sample
      REQUIRE(d <= nearest + 1e-12);
      worst_gap = std::max(worst_gap, nearest - d);
    }
    CHECK(worst_gap < 0.03);
  }
}

TEST_CASE("AnalyticSdf: signs, closed values and parsing") {
  const auto s = AnalyticSdf::sphere(0.5);
  CHECK(s(0, 0, 0) == -0.5);
  CHECK(s(1, 0, 0) == doctest::Approx(0.5));
  const auto b = AnalyticSdf::box(0.3, 0.4, 0.5);
  CHECK(b(0, 0, 0) == doctest::Approx(-0.3));
  CHECK(b(1.3, 1.4, 0) == doctest::Approx(std::sqrt(2.0)));
  const auto t = AnalyticSdf::torus(0.5, 0.2);
  CHECK(t(0.5, 0, 0) == doctest::Approx(-0.2));
  CHECK(t(0, 0, 0) == doctest::Approx(0.3));
  CHECK(parse_sdf("sphere:0.5")(0, 0, 0) == -0.5);
  CHECK(parse_sdf("box:0.2")(0, 0, 0) == doctest::Approx(-0.2));
  CHECK(parse_sdf("torus:0.5,0.2")(0.5, 0, 0) == doctest::Approx(-0.2));
  CHECK_THROWS_AS(parse_sdf("cone:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sdf("sphere:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sdf("torus:0.2,0.5"), std::invalid_argument);
  const Vector v = s.evaluate(Matrix{{0, 0, 0}, {0, 0.5, 0}});
  CHECK(v[0] == -0.5);
  CHECK(v[1] == 0.0);
}

TEST_CASE("score_sdf: oracle predictor is perfect") {
  const auto sdf = AnalyticSdf::torus(0.5, 0.2);
  const auto score = score_sdf(sdf, [&](const Matrix& p) { return sdf.evaluate(p); }, 24);
  CHECK(score.sign_iou == 1.0);
  CHECK(score.mae == 0.0);
  const auto off = score_sdf(sdf, [](const Matrix& p) { return Vector(p.rows(), 1.0); }, 16);
  CHECK(off.sign_iou == 0.0);
}

TEST_CASE("fit_sdf: short run is deterministic and bounded") {
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.log_every = 10;
  cfg.seed = 3;
  const auto sdf = AnalyticSdf::sphere(0.5);
  const auto a = fit_sdf(sdf, spec(Backbone::Sine, true, 30), InitScheme{}, cfg, Architecture{2, 32}, 256, 16);
  const auto b = fit_sdf(sdf, spec(Backbone::Sine, true, 30), InitScheme{}, cfg, Architecture{2, 32}, 256, 16);
  CHECK(a.net == b.net);
  CHECK(a.sign_iou >= 0.0);
  CHECK(a.sign_iou <= 1.0);
  CHECK(a.mae >= 0.0);
  REQUIRE(a.log.size() == 2);
  CHECK(a.log.back().metric == a.sign_iou);
}

TEST_CASE("preset_scheme") {
  InitScheme base;
  base.k_bias = 0.7;
  const auto act = spec(Backbone::Sine, true, 30);
  CHECK(preset_scheme(InitPreset::Literal, base, act, 2, 256).first_weight_bound == std::nullopt);
  const auto r = preset_scheme(InitPreset::Reference, base, act, 2, 256);
  CHECK(r.first_weight_bound == 0.5);
  CHECK(r.deep_weight_gain == doctest::Approx(1.0 / 30));
  CHECK(r.deep_k_bias == 0.0625);
  CHECK(r.k_bias == 0.7);
  const auto g = preset_scheme(InitPreset::Reference, base, spec(Backbone::Gauss, true, 30, 10), 3, 64);
  CHECK(g.weight_rule == WeightRule::SirenUniform);
  CHECK(g.first_weight_bound == doctest::Approx(1 / std::sqrt(3.0)));
  CHECK(g.deep_weight_gain == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(g.deep_k_bias == 0.125);
  CHECK(parse_init_preset(to_string(InitPreset::Reference)) == InitPreset::Reference);
  CHECK_THROWS_AS(parse_init_preset("siren"), std::invalid_argument);

  Rng rng(5);
  const auto net = init_network({2, 256, 256, 1}, act, r, rng);
  for (double w : net.weights[0].values()) REQUIRE(std::abs(w) <= 0.5);
  for (double w : net.weights[1].values()) REQUIRE(std::abs(w) <= std::sqrt(6.0 / 256) / 30);
  for (double b : net.biases[0]) REQUIRE(std::abs(b) <= 0.7);
  for (double b : net.biases[1]) REQUIRE(std::abs(b) <= 0.0625);

  Rng rng2(6);
  const auto gnet = init_network({3, 64, 64, 1}, spec(Backbone::Gauss, true, 30, 10), g, rng2);
  for (double w : gnet.weights[0].values()) REQUIRE(std::abs(w) <= 1 / std::sqrt(3.0));
  for (double w : gnet.weights[1].values()) REQUIRE(std::abs(w) <= 0.125 + 1e-15);
  for (double w : gnet.weights[2].values()) REQUIRE(std::abs(w) <= 0.125 + 1e-15);
}

TEST_CASE("fit_image: constant gray image") {
  const ImageGrid img(16, 16, 1, 0.5);
  TrainConfig cfg;
  cfg.iterations = 500;
  cfg.log_every = 100;
  const auto act = spec(Backbone::Sine, true, 30);
  InitScheme s;
  s.k_bias = image_default_k(Backbone::Sine);
  s = preset_scheme(InitPreset::Reference, s, act, 2, 64);
  const auto r = fit_image(img, act, s, cfg, Architecture{3, 64});
  MESSAGE("constant image PSNR " << r.psnr);
  CHECK(r.psnr > 40.0);
  CHECK(r.reconstruction.same_shape(img));
  CHECK(r.log.back().metric == r.psnr);
}

TEST_CASE("fit_image: PSNR does not fall across checkpoints of a full-batch run") {
  const ImageGrid img = load_image(std::string(FINER_TEST_DATA) + "/astronaut64.ppm");
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.log_every = 60;
  const auto act = spec(Backbone::Sine, true, 30);
  InitScheme s;
  s.k_bias = image_default_k(Backbone::Sine);
  s = preset_scheme(InitPreset::Reference, s, act, 2, 64);
  const auto r = fit_image(img, act, s, cfg, Architecture{3, 64});
  REQUIRE(r.log.size() == 5);
  for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].metric >= r.log[i - 1].metric);
  MESSAGE("64x64 PSNR after 300 iterations " << r.psnr);
}

TEST_CASE("gap_experiment: p = 1 arms are bitwise identical") {
  ImageGrid img(12, 12, 1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = (i % 7) / 7.0;
  TrainConfig cfg;
  cfg.iterations = 30;
  cfg.log_every = 10;
  const auto g = gap_experiment(spec(Backbone::Sine, false, 1.0), img, InitScheme{}, cfg, Architecture{2, 32});
  CHECK(g.p == 1.0);
  CHECK(g.standard.net == g.scaled_init.net);
  CHECK(log_csv(g.standard.log) == log_csv(g.scaled_init.log));

  const auto [a, s] = fold_scale_into_init(spec(Backbone::WaveletReal, false, 20, 10), InitScheme{});
  CHECK(a.s0 == 1.0);
  CHECK(a.omega0 == 2.0);
  CHECK(s.weight_gain == 10.0);
  CHECK(s.k_bias == 10.0);
  CHECK(s.output_weight_gain == 1.0);
  CHECK_THROWS_AS(fold_scale_into_init(spec(Backbone::Sine, true, 30), InitScheme{}), std::invalid_argument);
}

TEST_CASE("fold_scale_into_init: both forms compute the same function at init") {
  Rng xr(9);
  Matrix x(64, 2);
  for (double& v : x.values()) v = xr.uniform(-1, 1);
  InitScheme base;
  base.k_bias = 0.5;
  for (const auto& act : {spec(Backbone::Sine, false, 30), spec(Backbone::Gauss, false, 30, 10),
                          spec(Backbone::WaveletReal, false, 20, 10)})
    for (bool reference : {false, true}) {
      const InitScheme s =
          reference ? preset_scheme(InitPreset::Reference, base, act, 2, 32) : base;
      const auto [fa, fs] = fold_scale_into_init(act, s);
      Rng r1(3), r2(3);
      const Matrix a = forward(init_network({2, 32, 32, 1}, act, s, r1), x);
      const Matrix b = forward(init_network({2, 32, 32, 1}, fa, fs, r2), x);
      double worst = 0, scale = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
        scale = std::max(scale, std::abs(a.values()[i]));
      }
      INFO(to_string(act.backbone), " reference=", reference);
      CHECK(scale > 1e-3);
      CHECK(worst <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("fft_radix2 against a direct DFT") {
  Rng rng(4);
  const std::size_t n = 64;
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = rng.uniform(-1, 1);
    im[i] = rng.uniform(-1, 1);
  }
  std::vector<std::complex<double>> direct(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t)
      direct[k] += std::complex<double>(re[t], im[t]) * std::polar(1.0, -2 * kPi * double(k * t % n) / double(n));
  fft_radix2(re, im);
  for (std::size_t k = 0; k < n; ++k) {
    CHECK(re[k] == doctest::Approx(direct[k].real()).epsilon(1e-12).scale(1.0));
    CHECK(im[k] == doctest::Approx(direct[k].imag()).epsilon(1e-12).scale(1.0));
  }
  std::vector<double> bad(6), bad_im(6);
  CHECK_THROWS_AS(fft_radix2(bad, bad_im), std::invalid_argument);
}

TEST_CASE("neuron_dominant_freq: planted tone and DC neuron") {
  NetworkState net;
  net.layer_dims = {2, 3, 1};
  // along x = -1 + 2t, sin(w x) completes w / pi cycles per unit t
  net.weights = {Matrix{{4 * kPi, 0.0}, {0.0, 0.0}, {0.0, 9 * kPi}}, Matrix{{1.0, 1.0, 1.0}}};
  net.biases = {Vector{0.3, 0.1, 0.0}, Vector{0.0}};
  net.activation = spec(Backbone::Sine, false, 1.0);
  net.stage_widths = {3};
  const auto f0 = neuron_dominant_freq(net, 0, 256);
  REQUIRE(f0.size() == 3);
  CHECK(f0[0] == std::optional<std::size_t>(4));
  CHECK_FALSE(f0[1].has_value());
  CHECK_FALSE(f0[2].has_value());
  const auto f1 = neuron_dominant_freq(net, 1, 256);
  CHECK(f1[2] == std::optional<std::size_t>(9));
  CHECK(frequency_spread(f0) == 0);
  const std::vector<std::optional<std::size_t>> mixed{3, std::nullopt, 11};
  CHECK(frequency_spread(mixed) == 8);
  CHECK(neuron_freq_csv(mixed) == "neuron,dominant_freq_bin\n0,3\n1,0\n2,11\n");
  CHECK_THROWS_AS(neuron_dominant_freq(net, 2, 256), std::invalid_argument);
  CHECK_THROWS_AS(neuron_dominant_freq(net, 0, 100), std::invalid_argument);
}
