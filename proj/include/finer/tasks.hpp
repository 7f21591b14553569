#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finer/activation.hpp"
#include "finer/image.hpp"
#include "finer/matrix.hpp"
#include "finer/network.hpp"
#include "finer/training.hpp"

namespace finer {

struct Architecture {
  std::size_t hidden_layers = 3;
  std::size_t width = 256;

  std::vector<std::size_t> dims(std::size_t in, std::size_t out) const;
};

/// Bias range presets.
double image_default_k(Backbone b);  // 1/sqrt(2), 1, 1
double sdf_default_k(Backbone b);    // 1, 1, 1/sqrt(2)

/// Bias and weight ranges used when the run does not set them explicitly.
///  literal:   every layer follows weight_rule, every hidden bias ~ U(-k, k).
///  reference: deeper hidden biases ~ U(-1/sqrt(width), 1/sqrt(width)).
///             Sine: first-layer weights ~ U(-1/d_in, 1/d_in), deeper weight
///             bounds divided by omega0. Gauss and wavelet: every weight
///             ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
enum class InitPreset { Literal, Reference };

std::string_view to_string(InitPreset p);
InitPreset parse_init_preset(std::string_view name);

/// Literal returns `base` unchanged. Reference fills the first-layer bound,
/// the deeper gain and bias range, and for non-Sine backbones the weight rule.
InitScheme preset_scheme(InitPreset preset, const InitScheme& base, const ActivationSpec& activation,
                         std::size_t input_dim, std::size_t width);

/// Cell centres of a regular grid over [-1, 1]^d, one row per point.
/// Enumeration is row-major with the last dimension fastest, so for an
/// image coord_grid({height, width}) row y*width+x holds (y, x).
Matrix coord_grid(const std::vector<std::size_t>& dims);

/// forward() in row chunks; identical to one call.
Matrix forward_chunked(const NetworkState& net, const Matrix& x, std::size_t chunk = 8192);

class AnalyticSdf {
 public:
  enum class Shape { Sphere, Box, Torus };

  static AnalyticSdf sphere(double radius);
  static AnalyticSdf box(double hx, double hy, double hz);
  /// Ring of major radius R in the xy plane, tube radius r.
  static AnalyticSdf torus(double major, double minor);

  Shape shape() const { return shape_; }
  std::string name() const;
  /// Exact signed distance, negative inside.
  double operator()(double x, double y, double z) const;
  /// One value per row of an n x 3 matrix.
  Vector evaluate(const Matrix& points) const;

 private:
  AnalyticSdf(Shape s, std::array<double, 3> p) : shape_(s), p_(p) {}
  Shape shape_;
  std::array<double, 3> p_;
};

AnalyticSdf parse_sdf(const std::string& spec);

struct ImageFitResult {
  NetworkState net;
  std::vector<LogEntry> log;
  ImageGrid reconstruction;
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Net evaluated on every pixel centre, clamped to [0, 1].
ImageGrid reconstruct_image(const NetworkState& net, std::size_t width, std::size_t height);

/// Trains a (2 -> channels) network on the image. batch_size 0 (or at least
/// the pixel count) trains full batch; otherwise pixels are drawn with
/// replacement. The log metric is PSNR of the full reconstruction.
ImageFitResult fit_image(const ImageGrid& image, const ActivationSpec& activation, const InitScheme& scheme,
                         const TrainConfig& cfg, const Architecture& arch);

struct SignalFitResult {
  NetworkState net;
  std::vector<LogEntry> log;
  double mse = 0.0;
};

/// 1D regression of y on x, full batch.
SignalFitResult fit_signal(std::span<const double> x, std::span<const double> y, const ActivationSpec& activation,
                           const InitScheme& scheme, const TrainConfig& cfg, const Architecture& arch);

/// Fresh uniform points in [-1, 1]^3 every call, targets from the SDF.
class SdfSampler final : public Sampler {
 public:
  SdfSampler(AnalyticSdf sdf, std::size_t batch, std::uint64_t seed);
  Batch next() override;

 private:
  AnalyticSdf sdf_;
  std::size_t batch_;
  Rng rng_;
};

struct SdfScore {
  double sign_iou;
  double mae;
};

/// Scores a predictor on the cell centres of an eval_grid^3 grid.
SdfScore score_sdf(const AnalyticSdf& sdf, const std::function<Vector(const Matrix&)>& predictor,
                   std::size_t eval_grid);

struct SdfFitResult {
  NetworkState net;
  std::vector<LogEntry> log;
  double sign_iou = 0.0;
  double mae = 0.0;
};

/// n_train points are drawn per iteration; the log metric is sign IoU on the
/// evaluation grid.
SdfFitResult fit_sdf(const AnalyticSdf& sdf, const ActivationSpec& activation, const InitScheme& scheme,
                     const TrainConfig& cfg, const Architecture& arch, std::size_t n_train, std::size_t eval_grid);

struct GapResult {
  double p = 1.0;
  ImageFitResult standard;
  ImageFitResult scaled_init;
};

/// The scale parameter p of a plain backbone: omega0 for Sine, s0 for Gauss
/// and WaveletReal.
double scale_parameter(const ActivationSpec& spec);
/// Same function with p folded into the initialisation: p = 1 (for the
/// wavelet omega0 becomes omega0 / s0), hidden weight bounds and bias ranges
/// multiplied by p. The output layer keeps its bound.
std::pair<ActivationSpec, InitScheme> fold_scale_into_init(const ActivationSpec& spec, const InitScheme& scheme);

/// Runs fit_image twice with identical seeds and budget: once as given and
/// once with the scale folded into the initialisation.
GapResult gap_experiment(const ActivationSpec& backbone, const ImageGrid& image, const InitScheme& scheme,
                         const TrainConfig& cfg, const Architecture& arch);

struct StreamImageResult {
  StreamResult stream;
  /// PSNR of decode_at_width at each stage, from the final network.
  std::vector<double> stage_psnr;
  std::vector<ImageGrid> stage_reconstructions;
};

StreamImageResult stream_image(const ImageGrid& image, const ActivationSpec& activation, const InitScheme& scheme,
                               const TrainConfig& cfg, std::size_t hidden_layers, const std::vector<StagePlan>& plan);

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

/// Dominant frequency of every first-layer neuron along the line
/// x[axis] = -1 + 2t, t = i / n_samples, other inputs 0. The result is the
/// non-DC bin (cycles per probe interval) with the largest magnitude, or
/// nullopt for a neuron whose response is constant.
std::vector<std::optional<std::size_t>> neuron_dominant_freq(const NetworkState& net, std::size_t axis,
                                                             std::size_t n_samples);

/// max - min over the neurons with a dominant frequency (0 if none).
std::size_t frequency_spread(std::span<const std::optional<std::size_t>> freqs);

/// neuron,dominant_freq_bin; DC neurons are written with bin 0.
std::string neuron_freq_csv(std::span<const std::optional<std::size_t>> freqs);

}  // namespace finer
