#include "finer/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace finer {

std::string_view to_string(WeightRule r) {
  switch (r) {
    case WeightRule::SirenUniform: return "siren";
    case WeightRule::XavierUniform: return "xavier";
  }
  return "unknown";
}

WeightRule parse_weight_rule(std::string_view name) {
  if (name == "siren") return WeightRule::SirenUniform;
  if (name == "xavier") return WeightRule::XavierUniform;
  throw std::invalid_argument("unknown weight rule '" + std::string(name) + "'");
}

WeightRule default_weight_rule(Backbone b) {
  return b == Backbone::Sine ? WeightRule::SirenUniform : WeightRule::XavierUniform;
}

void InitScheme::validate() const {
  if (!(k_bias >= 0.0) || !std::isfinite(k_bias)) throw std::invalid_argument("init: k_bias must be >= 0");
  if (first_weight_bound && !(*first_weight_bound > 0.0 && std::isfinite(*first_weight_bound)))
    throw std::invalid_argument("init: first_weight_bound must be positive");
  if (deep_k_bias && !(*deep_k_bias >= 0.0 && std::isfinite(*deep_k_bias)))
    throw std::invalid_argument("init: deep_k_bias must be >= 0");
  if (!(weight_gain > 0.0) || !std::isfinite(weight_gain))
    throw std::invalid_argument("init: weight_gain must be positive");
  if (!(deep_weight_gain > 0.0) || !std::isfinite(deep_weight_gain))
    throw std::invalid_argument("init: deep_weight_gain must be positive");
  if (output_weight_gain && (!(*output_weight_gain > 0.0) || !std::isfinite(*output_weight_gain)))
    throw std::invalid_argument("init: output_weight_gain must be positive");
  if (ring && !(ring->inner >= 0.0 && ring->inner < ring->outer))
    throw std::invalid_argument("init: ring needs 0 <= inner < outer");
}

std::optional<std::size_t> NetworkState::uniform_hidden_width() const {
  if (layer_dims.size() < 3) return std::nullopt;
  const std::size_t h = layer_dims[1];
  for (std::size_t l = 1; l + 1 < layer_dims.size(); ++l)
    if (layer_dims[l] != h) return std::nullopt;
  return h;
}

std::size_t NetworkState::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void NetworkState::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("network: need at least input and output dims");
  const std::size_t layers = layer_dims.size() - 1;
  if (weights.size() != layers || biases.size() != layers)
    throw std::invalid_argument("network: expected " + std::to_string(layers) + " layers");
  for (std::size_t l = 0; l < layers; ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l])
      throw std::invalid_argument("network: layer " + std::to_string(l + 1) + " weight is " +
                                  weights[l].shape() + ", expected " + std::to_string(layer_dims[l + 1]) +
                                  "x" + std::to_string(layer_dims[l]));
    if (biases[l].size() != layer_dims[l + 1])
      throw std::invalid_argument("network: layer " + std::to_string(l + 1) + " bias has wrong length");
  }
  if (!stage_widths.empty()) {
    if (!std::is_sorted(stage_widths.begin(), stage_widths.end()) ||
        std::adjacent_find(stage_widths.begin(), stage_widths.end()) != stage_widths.end())
      throw std::invalid_argument("network: stage_widths must be strictly ascending");
    const auto h = uniform_hidden_width();
    if (!h || stage_widths.back() != *h)
      throw std::invalid_argument("network: stage_widths must end at the hidden width");
  }
  activation.validate();
}

Vector flatten_parameters(const NetworkState& net) {
  Vector out;
  out.reserve(net.parameter_count());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    out.insert(out.end(), net.weights[l].values().begin(), net.weights[l].values().end());
    out.insert(out.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return out;
}

namespace {

double weight_bound(WeightRule rule, std::size_t fan_in, std::size_t fan_out, double gain) {
  const double n = rule == WeightRule::SirenUniform ? static_cast<double>(fan_in)
                                                    : static_cast<double>(fan_in + fan_out);
  return gain * std::sqrt(6.0 / n);
}

void fill_uniform(std::span<double> out, Rng& rng, double bound) {
  for (auto& v : out) v = rng.uniform(-bound, bound);
}

double ring_draw(Rng& rng, const BiasRing& ring, double k) {
  const double magnitude = rng.uniform(ring.inner * k, ring.outer * k);
  return (rng.next_u32() & 1u) ? -magnitude : magnitude;
}

double layer_k(const InitScheme& s, std::size_t layer) {
  return layer == 0 ? s.k_bias : s.deep_k_bias.value_or(s.k_bias);
}

double layer_bound(const InitScheme& s, std::size_t layer, std::size_t layers, std::size_t fan_in,
                   std::size_t fan_out) {
  const double gain = layer + 1 == layers && s.output_weight_gain ? *s.output_weight_gain : s.weight_gain;
  if (layer == 0 && s.first_weight_bound) return gain * *s.first_weight_bound;
  return weight_bound(s.weight_rule, fan_in, fan_out, layer == 0 ? gain : gain * s.deep_weight_gain);
}

}  // namespace

// Draw order: for each layer, weights row-major, then the hidden biases.
NetworkState init_network(const std::vector<std::size_t>& layer_dims, const ActivationSpec& activation,
                          const InitScheme& scheme, Rng& rng) {
  if (layer_dims.size() < 2) throw std::invalid_argument("init_network: need at least two layer dims");
  for (auto d : layer_dims)
    if (d == 0) throw std::invalid_argument("init_network: layer dims must be positive");
  activation.validate();
  scheme.validate();

  NetworkState net;
  net.layer_dims = layer_dims;
  net.activation = activation;
  net.k_bias = scheme.k_bias;
  const std::size_t layers = layer_dims.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_in = layer_dims[l], fan_out = layer_dims[l + 1];
    Matrix w(fan_out, fan_in);
    fill_uniform(w.values(), rng, layer_bound(scheme, l, layers, fan_in, fan_out));
    Vector b(fan_out, 0.0);
    if (l + 1 < layers) b = uniform_fill(rng, -layer_k(scheme, l), layer_k(scheme, l), fan_out);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  if (auto h = net.uniform_hidden_width()) net.stage_widths = {*h};
  return net;
}

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const Vector& b) {
  Matrix out = matmul_bt(x, w);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
  return out;
}

void check_input(const NetworkState& net, const Matrix& x) {
  if (x.cols() != net.input_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                                std::to_string(net.input_dim()));
}

void check_finite(const Matrix& m, std::size_t layer) {
  if (!m.all_finite())
    throw std::runtime_error("forward: non-finite pre-activation in layer " + std::to_string(layer));
}

}  // namespace

Matrix forward(const NetworkState& net, const Matrix& x) {
  check_input(net, x);
  Matrix z = x;
  const std::size_t layers = net.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix pre = affine(z, net.weights[l], net.biases[l]);
    check_finite(pre, l + 1);
    if (l + 1 == layers) return pre;
    z = Matrix(pre.rows(), pre.cols());
    act_batch(net.activation, pre.values(), z.values(), {});
  }
  return z;
}

Tape forward_with_tape(const NetworkState& net, const Matrix& x) {
  check_input(net, x);
  Tape tape;
  tape.input = x;
  const std::size_t layers = net.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& z = l == 0 ? tape.input : tape.post.back();
    Matrix pre = affine(z, net.weights[l], net.biases[l]);
    check_finite(pre, l + 1);
    if (l + 1 == layers) {
      tape.post.push_back(pre);
      tape.pre.push_back(std::move(pre));
      break;
    }
    Matrix post(pre.rows(), pre.cols());
    Matrix dact(pre.rows(), pre.cols());
    act_batch(net.activation, pre.values(), post.values(), dact.values());
    tape.pre.push_back(std::move(pre));
    tape.post.push_back(std::move(post));
    tape.dact.push_back(std::move(dact));
  }
  return tape;
}

namespace {

void check_tape(const NetworkState& net, const Tape& tape) {
  const std::size_t layers = net.num_layers();
  bool ok = tape.pre.size() == layers && tape.post.size() == layers && tape.dact.size() + 1 == layers &&
            tape.input.cols() == net.input_dim();
  for (std::size_t l = 0; ok && l < layers; ++l) {
    ok = tape.pre[l].cols() == net.layer_dims[l + 1] && tape.pre[l].rows() == tape.input.rows() &&
         tape.post[l].cols() == net.layer_dims[l + 1];
  }
  if (!ok) throw std::invalid_argument("backward: tape does not match the network (stale tape)");
}

// Walks the layers backwards, handing each layer's per-sample delta
// (batch x dims[l+1]) to `visit(l, delta)`, and returns d/dx.
template <class Visit>
Matrix backpropagate(const NetworkState& net, const Tape& tape, Matrix delta, Visit visit) {
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    visit(l, delta);
    Matrix upstream = matmul(delta, net.weights[l]);
    if (l == 0) return upstream;
    const Matrix& d = tape.dact[l - 1];
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream.values()[i] *= d.values()[i];
    delta = std::move(upstream);
  }
  return {};
}

}  // namespace

Gradients backward(const NetworkState& net, const Tape& tape, const Matrix& output_grad) {
  check_tape(net, tape);
  if (output_grad.rows() != tape.input.rows() || output_grad.cols() != net.output_dim())
    throw std::invalid_argument("backward: output_grad is " + output_grad.shape() + ", expected " +
                                std::to_string(tape.input.rows()) + "x" + std::to_string(net.output_dim()));
  Gradients g;
  const std::size_t layers = net.num_layers();
  g.weights.resize(layers);
  g.biases.resize(layers);
  g.input = backpropagate(net, tape, output_grad, [&](std::size_t l, const Matrix& delta) {
    const Matrix& z = l == 0 ? tape.input : tape.post[l - 1];
    g.weights[l] = matmul_at(delta, z);
    Vector gb(delta.cols(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto row = delta.row(i);
      for (std::size_t j = 0; j < gb.size(); ++j) gb[j] += row[j];
    }
    g.biases[l] = std::move(gb);
  });
  return g;
}

Vector Gradients::flatten() const {
  Vector out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].values().begin(), weights[l].values().end());
    out.insert(out.end(), biases[l].begin(), biases[l].end());
  }
  return out;
}

Matrix parameter_jacobian(const NetworkState& net, const Tape& tape) {
  check_tape(net, tape);
  if (net.output_dim() != 1) throw std::invalid_argument("parameter_jacobian: network output must be scalar");
  const std::size_t batch = tape.input.rows();
  Matrix jac(batch, net.parameter_count());

  std::vector<std::size_t> offset(net.num_layers() + 1, 0);
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    offset[l + 1] = offset[l] + net.weights[l].size() + net.biases[l].size();

  backpropagate(net, tape, Matrix(batch, 1, 1.0), [&](std::size_t l, const Matrix& delta) {
    const Matrix& z = l == 0 ? tape.input : tape.post[l - 1];
    const std::size_t out = delta.cols(), in = z.cols();
    for (std::size_t i = 0; i < batch; ++i) {
      double* dst = jac.row(i).data() + offset[l];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta(i, o);
        for (std::size_t k = 0; k < in; ++k) dst[o * in + k] = d * z(i, k);
      }
      for (std::size_t o = 0; o < out; ++o) dst[out * in + o] = delta(i, o);
    }
  });
  return jac;
}

// Draw order per layer: new weight rows (row-major over all columns), then
// new biases.
NetworkState widen(const NetworkState& net, std::size_t new_width, const InitScheme& scheme, Rng& rng) {
  net.validate();
  scheme.validate();
  const auto old = net.uniform_hidden_width();
  if (!old) throw std::invalid_argument("widen: network needs a uniform hidden width");
  if (new_width <= *old)
    throw std::invalid_argument("widen: new width " + std::to_string(new_width) + " must exceed current width " +
                                std::to_string(*old));

  NetworkState out = net;
  const std::size_t layers = net.num_layers();
  for (std::size_t l = 1; l < layers; ++l) out.layer_dims[l] = new_width;

  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in_old = net.layer_dims[l], out_old = net.layer_dims[l + 1];
    const std::size_t in_new = out.layer_dims[l], out_new = out.layer_dims[l + 1];
    Matrix w(out_new, in_new, 0.0);
    for (std::size_t r = 0; r < out_old; ++r)
      std::copy_n(net.weights[l].row(r).data(), in_old, w.row(r).data());
    const double bound = layer_bound(scheme, l, layers, in_new, out_new);
    for (std::size_t r = out_old; r < out_new; ++r) fill_uniform(w.row(r), rng, bound);
    out.weights[l] = std::move(w);

    Vector b(out_new, 0.0);
    std::copy(net.biases[l].begin(), net.biases[l].end(), b.begin());
    for (std::size_t r = out_old; r < out_new; ++r)
      b[r] = scheme.ring ? ring_draw(rng, *scheme.ring, layer_k(scheme, l)) : rng.uniform(-layer_k(scheme, l), layer_k(scheme, l));
    out.biases[l] = std::move(b);
  }
  out.stage_widths.push_back(new_width);
  return out;
}

NetworkState sub_network(const NetworkState& net, std::size_t width) {
  if (std::find(net.stage_widths.begin(), net.stage_widths.end(), width) == net.stage_widths.end())
    throw std::invalid_argument("decode_at_width: width " + std::to_string(width) + " is not a recorded stage");
  NetworkState sub;
  sub.layer_dims = net.layer_dims;
  for (std::size_t l = 1; l + 1 < sub.layer_dims.size(); ++l) sub.layer_dims[l] = width;
  sub.activation = net.activation;
  sub.k_bias = net.k_bias;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t rows = sub.layer_dims[l + 1], cols = sub.layer_dims[l];
    sub.weights.push_back(net.weights[l].block(rows, cols));
    sub.biases.emplace_back(net.biases[l].begin(), net.biases[l].begin() + static_cast<std::ptrdiff_t>(rows));
  }
  for (auto w : net.stage_widths)
    if (w <= width) sub.stage_widths.push_back(w);
  return sub;
}

Matrix decode_at_width(const NetworkState& net, std::size_t width, const Matrix& x) {
  return forward(sub_network(net, width), x);
}

}  // namespace finer
