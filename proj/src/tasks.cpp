#include "finer/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "finer/csv.hpp"
#include "finer/metrics.hpp"

namespace finer {

std::vector<std::size_t> Architecture::dims(std::size_t in, std::size_t out) const {
  if (hidden_layers == 0 || width == 0) throw std::invalid_argument("architecture: need at least one hidden unit");
  std::vector<std::size_t> d{in};
  d.insert(d.end(), hidden_layers, width);
  d.push_back(out);
  return d;
}

double image_default_k(Backbone b) { return b == Backbone::Sine ? 1.0 / std::numbers::sqrt2 : 1.0; }
double sdf_default_k(Backbone b) { return b == Backbone::WaveletReal ? 1.0 / std::numbers::sqrt2 : 1.0; }

std::string_view to_string(InitPreset p) { return p == InitPreset::Literal ? "literal" : "reference"; }

InitPreset parse_init_preset(std::string_view name) {
  if (name == "literal") return InitPreset::Literal;
  if (name == "reference") return InitPreset::Reference;
  throw std::invalid_argument("unknown init preset '" + std::string(name) + "'");
}

InitScheme preset_scheme(InitPreset preset, const InitScheme& base, const ActivationSpec& activation,
                         std::size_t input_dim, std::size_t width) {
  if (preset == InitPreset::Literal) return base;
  if (input_dim == 0 || width == 0) throw std::invalid_argument("preset_scheme: dims must be positive");
  InitScheme s = base;
  s.deep_k_bias = 1.0 / std::sqrt(static_cast<double>(width));
  if (activation.backbone == Backbone::Sine) {
    s.first_weight_bound = 1.0 / static_cast<double>(input_dim);
    s.deep_weight_gain = 1.0 / activation.omega0;
  } else {
    // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere
    s.weight_rule = WeightRule::SirenUniform;
    s.first_weight_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    s.deep_weight_gain = 1.0 / std::sqrt(6.0);
  }
  return s;
}

Matrix coord_grid(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("coord_grid: no dimensions");
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("coord_grid: dimensions must be positive");
    total *= d;
  }
  Matrix g(total, dims.size());
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rem = r;
    for (std::size_t a = dims.size(); a-- > 0;) {
      const std::size_t i = rem % dims[a];
      rem /= dims[a];
      g(r, a) = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(dims[a]);
    }
  }
  return g;
}

Matrix forward_chunked(const NetworkState& net, const Matrix& x, std::size_t chunk) {
  if (x.rows() <= chunk) return forward(net, x);
  Matrix out(x.rows(), net.output_dim());
  for (std::size_t start = 0; start < x.rows(); start += chunk) {
    const std::size_t rows = std::min(chunk, x.rows() - start);
    Matrix part(rows, x.cols());
    std::copy_n(x.row(start).data(), rows * x.cols(), part.data());
    const Matrix y = forward(net, part);
    std::copy_n(y.data(), y.size(), out.row(start).data());
  }
  return out;
}

// ---- analytic SDFs

AnalyticSdf AnalyticSdf::sphere(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("sdf: sphere radius must be positive");
  return {Shape::Sphere, {r, 0.0, 0.0}};
}

AnalyticSdf AnalyticSdf::box(double hx, double hy, double hz) {
  if (!(hx > 0.0 && hy > 0.0 && hz > 0.0)) throw std::invalid_argument("sdf: box half-extents must be positive");
  return {Shape::Box, {hx, hy, hz}};
}

AnalyticSdf AnalyticSdf::torus(double major, double minor) {
  if (!(minor > 0.0 && major > minor)) throw std::invalid_argument("sdf: torus needs major > minor > 0");
  return {Shape::Torus, {major, minor, 0.0}};
}

std::string AnalyticSdf::name() const {
  std::ostringstream s;
  switch (shape_) {
    case Shape::Sphere: s << "sphere:" << format_double(p_[0]); break;
    case Shape::Box:
      s << "box:" << format_double(p_[0]) << ',' << format_double(p_[1]) << ',' << format_double(p_[2]);
      break;
    case Shape::Torus: s << "torus:" << format_double(p_[0]) << ',' << format_double(p_[1]); break;
  }
  return s.str();
}

double AnalyticSdf::operator()(double x, double y, double z) const {
  switch (shape_) {
    case Shape::Sphere:
      return std::sqrt(x * x + y * y + z * z) - p_[0];
    case Shape::Box: {
      const double qx = std::abs(x) - p_[0], qy = std::abs(y) - p_[1], qz = std::abs(z) - p_[2];
      const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0), oz = std::max(qz, 0.0);
      return std::sqrt(ox * ox + oy * oy + oz * oz) + std::min(std::max({qx, qy, qz}), 0.0);
    }
    case Shape::Torus: {
      const double q = std::sqrt(x * x + y * y) - p_[0];
      return std::sqrt(q * q + z * z) - p_[1];
    }
  }
  return 0.0;
}

Vector AnalyticSdf::evaluate(const Matrix& pts) const {
  if (pts.cols() != 3) throw std::invalid_argument("sdf: points must be n x 3, got " + pts.shape());
  Vector out(pts.rows());
  for (std::size_t i = 0; i < pts.rows(); ++i) out[i] = (*this)(pts(i, 0), pts(i, 1), pts(i, 2));
  return out;
}

AnalyticSdf parse_sdf(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::invalid_argument("sdf: bad number '" + tok + "' in '" + spec + "'");
      }
    }
  }
  if (kind == "sphere" && args.size() <= 1) return AnalyticSdf::sphere(args.empty() ? 0.5 : args[0]);
  if (kind == "box" && args.size() == 3) return AnalyticSdf::box(args[0], args[1], args[2]);
  if (kind == "box" && args.size() == 1) return AnalyticSdf::box(args[0], args[0], args[0]);
  if (kind == "torus" && args.size() == 2) return AnalyticSdf::torus(args[0], args[1]);
  throw std::invalid_argument("sdf: cannot parse '" + spec + "' (sphere:r, box:hx,hy,hz, torus:R,r)");
}

// ---- images and signals

ImageGrid reconstruct_image(const NetworkState& net, std::size_t width, std::size_t height) {
  return ImageGrid::from_matrix(forward_chunked(net, coord_grid({height, width})), width, height);
}

ImageFitResult fit_image(const ImageGrid& image, const ActivationSpec& activation, const InitScheme& scheme,
                         const TrainConfig& cfg, const Architecture& arch) {
  image.validate();
  Rng rng = Rng::child(cfg.seed, 0);
  NetworkState net = init_network(arch.dims(2, image.channels), activation, scheme, rng);
  Matrix coords = coord_grid({image.height, image.width});
  Matrix targets = image.as_matrix();

  std::unique_ptr<Sampler> sampler;
  if (cfg.batch_size == 0 || cfg.batch_size >= image.pixel_count())
    sampler = std::make_unique<FullBatchSampler>(std::move(coords), std::move(targets));
  else
    sampler = std::make_unique<MinibatchSampler>(std::move(coords), std::move(targets), cfg.batch_size, cfg.seed);

  const MetricFn metric = [&](const NetworkState& n) {
    return psnr(reconstruct_image(n, image.width, image.height), image);
  };
  FitResult fr = fit(std::move(net), *sampler, cfg, std::nullopt, metric);

  ImageFitResult r;
  r.reconstruction = reconstruct_image(fr.net, image.width, image.height);
  r.psnr = psnr(r.reconstruction, image);
  r.ssim = image.width >= 11 && image.height >= 11 ? ssim(r.reconstruction, image) : 0.0;
  r.net = std::move(fr.net);
  r.log = std::move(fr.log);
  return r;
}

SignalFitResult fit_signal(std::span<const double> x, std::span<const double> y, const ActivationSpec& activation,
                           const InitScheme& scheme, const TrainConfig& cfg, const Architecture& arch) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_signal: x and y must be equal, non-empty");
  Matrix xs(x.size(), 1, Vector(x.begin(), x.end()));
  Matrix ys(y.size(), 1, Vector(y.begin(), y.end()));
  Rng rng = Rng::child(cfg.seed, 0);
  NetworkState net = init_network(arch.dims(1, 1), activation, scheme, rng);
  FullBatchSampler sampler(xs, ys);
  FitResult fr = fit(std::move(net), sampler, cfg);
  SignalFitResult r;
  r.mse = l2_loss(forward(fr.net, xs), ys).loss;
  r.net = std::move(fr.net);
  r.log = std::move(fr.log);
  return r;
}

// ---- SDF

SdfSampler::SdfSampler(AnalyticSdf sdf, std::size_t batch, std::uint64_t seed)
    : sdf_(sdf), batch_(batch), rng_(seed, 11) {
  if (batch_ == 0) throw std::invalid_argument("fit_sdf: n_train must be >= 1");
}

Batch SdfSampler::next() {
  Batch b{Matrix(batch_, 3), Matrix(batch_, 1)};
  for (std::size_t i = 0; i < batch_; ++i) {
    const double x = rng_.uniform(-1.0, 1.0), y = rng_.uniform(-1.0, 1.0), z = rng_.uniform(-1.0, 1.0);
    b.coords(i, 0) = x;
    b.coords(i, 1) = y;
    b.coords(i, 2) = z;
    b.targets(i, 0) = sdf_(x, y, z);
  }
  return b;
}

SdfScore score_sdf(const AnalyticSdf& sdf, const std::function<Vector(const Matrix&)>& predictor,
                   std::size_t eval_grid) {
  if (eval_grid == 0) throw std::invalid_argument("score_sdf: eval grid must be positive");
  const Matrix pts = coord_grid({eval_grid, eval_grid, eval_grid});
  const Vector truth = sdf.evaluate(pts);
  const Vector pred = predictor(pts);
  if (pred.size() != truth.size()) throw std::invalid_argument("score_sdf: predictor returned wrong count");
  double err = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) err += std::abs(pred[i] - truth[i]);
  return {sign_iou(pred, truth), err / static_cast<double>(pred.size())};
}

SdfFitResult fit_sdf(const AnalyticSdf& sdf, const ActivationSpec& activation, const InitScheme& scheme,
                     const TrainConfig& cfg, const Architecture& arch, std::size_t n_train, std::size_t eval_grid) {
  Rng rng = Rng::child(cfg.seed, 0);
  NetworkState net = init_network(arch.dims(3, 1), activation, scheme, rng);
  SdfSampler sampler(sdf, n_train, cfg.seed);
  auto predictor_for = [](const NetworkState& n) {
    return [&n](const Matrix& pts) { return forward_chunked(n, pts).values(); };
  };
  const MetricFn metric = [&](const NetworkState& n) { return score_sdf(sdf, predictor_for(n), eval_grid).sign_iou; };
  FitResult fr = fit(std::move(net), sampler, cfg, std::nullopt, metric);
  const SdfScore score = score_sdf(sdf, predictor_for(fr.net), eval_grid);
  return {std::move(fr.net), std::move(fr.log), score.sign_iou, score.mae};
}

// ---- capacity-convergence gap

double scale_parameter(const ActivationSpec& spec) {
  switch (spec.backbone) {
    case Backbone::Sine: return spec.omega0;
    case Backbone::Gauss:
    case Backbone::WaveletReal: return spec.s0;
    case Backbone::Relu: break;
  }
  throw std::invalid_argument("gap: backbone has no scale parameter");
}

std::pair<ActivationSpec, InitScheme> fold_scale_into_init(const ActivationSpec& spec, const InitScheme& scheme) {
  if (spec.finer) throw std::invalid_argument("gap: expects a plain backbone, not the variable-periodic form");
  const double p = scale_parameter(spec);
  ActivationSpec a = spec;
  InitScheme s = scheme;
  switch (spec.backbone) {
    case Backbone::Sine: a.omega0 = 1.0; break;
    case Backbone::Gauss: a.s0 = 1.0; break;
    case Backbone::WaveletReal:
      a.omega0 = spec.omega0 / p;
      a.s0 = 1.0;
      break;
    case Backbone::Relu: break;
  }
  s.output_weight_gain = scheme.output_weight_gain.value_or(scheme.weight_gain);
  s.weight_gain = scheme.weight_gain * p;
  s.k_bias = scheme.k_bias * p;
  if (s.deep_k_bias) *s.deep_k_bias *= p;
  return {a, s};
}

GapResult gap_experiment(const ActivationSpec& backbone, const ImageGrid& image, const InitScheme& scheme,
                         const TrainConfig& cfg, const Architecture& arch) {
  const auto [folded_act, folded_scheme] = fold_scale_into_init(backbone, scheme);
  GapResult r;
  r.p = scale_parameter(backbone);
  r.standard = fit_image(image, backbone, scheme, cfg, arch);
  r.scaled_init = fit_image(image, folded_act, folded_scheme, cfg, arch);
  return r;
}

// ---- streaming

StreamImageResult stream_image(const ImageGrid& image, const ActivationSpec& activation, const InitScheme& scheme,
                               const TrainConfig& cfg, std::size_t hidden_layers, const std::vector<StagePlan>& plan) {
  if (plan.empty()) throw std::invalid_argument("stream: empty stage plan");
  image.validate();
  Rng rng = Rng::child(cfg.seed, 0);
  NetworkState net0 = init_network(Architecture{hidden_layers, plan.front().width}.dims(2, image.channels), activation,
                                   scheme, rng);
  Matrix coords = coord_grid({image.height, image.width});
  Matrix targets = image.as_matrix();
  std::unique_ptr<Sampler> sampler;
  if (cfg.batch_size == 0 || cfg.batch_size >= image.pixel_count())
    sampler = std::make_unique<FullBatchSampler>(std::move(coords), std::move(targets));
  else
    sampler = std::make_unique<MinibatchSampler>(std::move(coords), std::move(targets), cfg.batch_size, cfg.seed);
  const MetricFn metric = [&](const NetworkState& n) {
    return psnr(reconstruct_image(n, image.width, image.height), image);
  };

  StreamImageResult r;
  r.stream = stream_fit(std::move(net0), plan, *sampler, cfg, scheme, metric);
  for (const auto& st : plan) {
    r.stage_reconstructions.push_back(reconstruct_image(sub_network(r.stream.net, st.width), image.width, image.height));
    r.stage_psnr.push_back(psnr(r.stage_reconstructions.back(), image));
  }
  return r;
}

// ---- neuron frequencies

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  if (im.size() != n || n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        const double wr = std::cos(ang * k), wi = std::sin(ang * k);
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * wr - im[b] * wi, ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
  }
}

std::vector<std::optional<std::size_t>> neuron_dominant_freq(const NetworkState& net, std::size_t axis,
                                                             std::size_t n_samples) {
  if (n_samples < 64 || (n_samples & (n_samples - 1)) != 0)
    throw std::invalid_argument("neuron_dominant_freq: n_samples must be a power of two >= 64");
  if (axis >= net.input_dim()) throw std::invalid_argument("neuron_dominant_freq: axis out of range");
  const Matrix& w = net.weights[0];
  const Vector& b = net.biases[0];
  const bool linear = net.num_layers() == 1;

  std::vector<std::optional<std::size_t>> out;
  std::vector<double> re(n_samples), im(n_samples);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n_samples);
      const double z = w(k, axis) * x + b[k];
      re[i] = linear ? z : act(net.activation, z);
      im[i] = 0.0;
    }
    fft_radix2(re, im);
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t f = 1; f <= n_samples / 2; ++f) {
      const double mag = std::hypot(re[f], im[f]);
      if (mag > best_mag) {
        best_mag = mag;
        best = f;
      }
    }
    if (best_mag <= 1e-9 * static_cast<double>(n_samples))
      out.emplace_back(std::nullopt);
    else
      out.emplace_back(best);
  }
  return out;
}

std::size_t frequency_spread(std::span<const std::optional<std::size_t>> freqs) {
  std::optional<std::size_t> lo, hi;
  for (const auto& f : freqs) {
    if (!f) continue;
    lo = lo ? std::min(*lo, *f) : *f;
    hi = hi ? std::max(*hi, *f) : *f;
  }
  return lo ? *hi - *lo : 0;
}

std::string neuron_freq_csv(std::span<const std::optional<std::size_t>> freqs) {
  std::string out = "neuron,dominant_freq_bin\n";
  for (std::size_t i = 0; i < freqs.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(freqs[i].value_or(0)) + "\n";
  return out;
}

}  // namespace finer
