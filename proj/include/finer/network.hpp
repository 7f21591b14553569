#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "finer/activation.hpp"
#include "finer/matrix.hpp"
#include "finer/rng.hpp"

namespace finer {

enum class WeightRule {
  SirenUniform,  // U(-sqrt(6/n_in), sqrt(6/n_in))
  XavierUniform  // U(-sqrt(6/(n_in+n_out)), sqrt(6/(n_in+n_out)))
};

std::string_view to_string(WeightRule r);
WeightRule parse_weight_rule(std::string_view name);
/// SirenUniform for Sine, XavierUniform for Gauss and WaveletReal.
WeightRule default_weight_rule(Backbone b);

/// Symmetric bias ring: magnitudes in [inner * k, outer * k], random sign.
struct BiasRing {
  double inner = 2.0;
  double outer = 3.0;
};

struct InitScheme {
  WeightRule weight_rule = WeightRule::SirenUniform;
  /// Hidden biases ~ U(-k_bias, k_bias).
  double k_bias = 1.0;
  /// Bias range for hidden layers after the first; k_bias when unset.
  std::optional<double> deep_k_bias;
  /// Used by widen() for the biases of newly added units.
  std::optional<BiasRing> ring;
  /// Multiplies every weight bound. 1 for the standard rules.
  double weight_gain = 1.0;
  /// Replaces the first layer's weight bound (before weight_gain).
  std::optional<double> first_weight_bound;
  /// Extra factor on the bounds of every layer after the first.
  double deep_weight_gain = 1.0;
  /// Replaces weight_gain on the final linear layer when set.
  std::optional<double> output_weight_gain;

  void validate() const;
};

/// Coordinate MLP: L-1 activated affine layers followed by one linear layer.
/// weights[l] is dims[l+1] x dims[l]; biases[l] has dims[l+1] entries.
struct NetworkState {
  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  ActivationSpec activation;
  /// Hidden widths the network can be decoded at, ascending. Set to the
  /// hidden width by init_network when all hidden layers share it.
  std::vector<std::size_t> stage_widths;
  double k_bias = 0.0;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  /// Common hidden width, or nullopt when hidden layers differ.
  std::optional<std::size_t> uniform_hidden_width() const;
  std::size_t parameter_count() const;
  /// Throws std::invalid_argument if shapes do not chain.
  void validate() const;

  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

/// Parameters flattened layer by layer: weights row-major, then biases.
Vector flatten_parameters(const NetworkState& net);

NetworkState init_network(const std::vector<std::size_t>& layer_dims, const ActivationSpec& activation,
                          const InitScheme& scheme, Rng& rng);

/// x is batch x d_in; result is batch x d_out. Row i of the result depends
/// only on row i of x, bit for bit.
Matrix forward(const NetworkState& net, const Matrix& x);

struct Tape {
  Matrix input;
  /// pre[l] = z^l before activation (l = 0..L-1 indexes layers 1..L).
  std::vector<Matrix> pre;
  /// post[l] = activated output; for the final linear layer equal to pre.
  std::vector<Matrix> post;
  /// act_deriv at pre[l] for the hidden layers.
  std::vector<Matrix> dact;

  const Matrix& output() const { return post.back(); }
};

Tape forward_with_tape(const NetworkState& net, const Matrix& x);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  /// d(sum_i <output_grad_i, f(x_i)>) / dx, batch x d_in.
  Matrix input;

  Vector flatten() const;
};

/// Reverse-mode gradients of sum_i <output_grad_i, f(x_i)> with respect to
/// every parameter and the input. Batch reductions run in row order.
Gradients backward(const NetworkState& net, const Tape& tape, const Matrix& output_grad);

/// Per-sample gradient of a scalar-output network: row i is
/// d f(x_i) / d theta in flatten_parameters order.
Matrix parameter_jacobian(const NetworkState& net, const Tape& tape);

/// Grows every hidden layer to new_width. Existing parameters keep their
/// top-left positions; weights from new units into existing units (and into
/// the outputs) start at zero; other new weights follow scheme.weight_rule
/// with the widened fan-in; new biases come from scheme.ring (or U(-k, k)
/// without one).
NetworkState widen(const NetworkState& net, std::size_t new_width, const InitScheme& scheme, Rng& rng);

/// Evaluates the sub-network formed by the first `width` units of every
/// hidden layer. width must be a recorded stage.
Matrix decode_at_width(const NetworkState& net, std::size_t width, const Matrix& x);

/// The sub-network decode_at_width evaluates, as a standalone state.
NetworkState sub_network(const NetworkState& net, std::size_t width);

}  // namespace finer
