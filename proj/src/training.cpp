#include "finer/training.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "finer/csv.hpp"

namespace finer {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("train: betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("train: eps must be positive");
  if (!(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0))
    throw std::invalid_argument("train: lr_final_fraction must lie in (0, 1]");
}

double TrainConfig::lr_at(std::size_t t) const {
  if (lr_final_fraction == 1.0 || iterations <= 1) return lr;
  const double progress = static_cast<double>(t - 1) / static_cast<double>(iterations - 1);
  return lr * std::pow(lr_final_fraction, progress);
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, std::size_t t, const TrainConfig& cfg, double lr,
               std::span<const std::uint8_t> mask) {
  const std::size_t n = params.size();
  if (grads.size() != n || m.size() != n || v.size() != n || (!mask.empty() && mask.size() != n))
    throw std::invalid_argument("adam_step: shape mismatch (params " + std::to_string(n) + ", grads " +
                                std::to_string(grads.size()) + ", m " + std::to_string(m.size()) + ", v " +
                                std::to_string(v.size()) + ")");
  if (t == 0) throw std::invalid_argument("adam_step: step index starts at 1");
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && mask[i]) continue;
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

LossResult l2_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("l2_loss: shape mismatch " + pred.shape() + " vs " + target.shape());
  LossResult r{0.0, Matrix(pred.rows(), pred.cols())};
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.values()[i] - target.values()[i];
    r.loss += d * d;
    r.grad.values()[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

FreezeMask FreezeMask::none(const NetworkState& net) {
  FreezeMask m;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    m.weights.emplace_back(net.weights[l].size(), 0);
    m.biases.emplace_back(net.biases[l].size(), 0);
  }
  return m;
}

FreezeMask FreezeMask::all(const NetworkState& net) {
  FreezeMask m;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    m.weights.emplace_back(net.weights[l].size(), 1);
    m.biases.emplace_back(net.biases[l].size(), 1);
  }
  return m;
}

FreezeMask FreezeMask::existing(const NetworkState& previous, const NetworkState& widened) {
  if (previous.num_layers() != widened.num_layers())
    throw std::invalid_argument("FreezeMask::existing: layer counts differ");
  FreezeMask m = none(widened);
  for (std::size_t l = 0; l < widened.num_layers(); ++l) {
    const Matrix& old_w = previous.weights[l];
    const std::size_t cols = widened.weights[l].cols();
    if (old_w.rows() > widened.weights[l].rows() || old_w.cols() > cols)
      throw std::invalid_argument("FreezeMask::existing: previous network is larger");
    for (std::size_t r = 0; r < old_w.rows(); ++r)
      for (std::size_t c = 0; c < old_w.cols(); ++c) m.weights[l][r * cols + c] = 1;
    for (std::size_t r = 0; r < previous.biases[l].size(); ++r) m.biases[l][r] = 1;
  }
  return m;
}

bool FreezeMask::matches(const NetworkState& net) const {
  if (weights.size() != net.num_layers() || biases.size() != net.num_layers()) return false;
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    if (weights[l].size() != net.weights[l].size() || biases[l].size() != net.biases[l].size()) return false;
  return true;
}

AdamState AdamState::zeros(const NetworkState& net) {
  AdamState s;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    s.m_weights.emplace_back(net.weights[l].size(), 0.0);
    s.v_weights.emplace_back(net.weights[l].size(), 0.0);
    s.m_biases.emplace_back(net.biases[l].size(), 0.0);
    s.v_biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return s;
}

FullBatchSampler::FullBatchSampler(Matrix coords, Matrix targets)
    : coords_(std::move(coords)), targets_(std::move(targets)) {
  if (coords_.rows() != targets_.rows()) throw std::invalid_argument("sampler: coords/targets row mismatch");
}

MinibatchSampler::MinibatchSampler(Matrix coords, Matrix targets, std::size_t batch_size, std::uint64_t seed)
    : coords_(std::move(coords)), targets_(std::move(targets)), batch_size_(batch_size), rng_(seed, 7) {
  if (coords_.rows() != targets_.rows()) throw std::invalid_argument("sampler: coords/targets row mismatch");
  if (coords_.rows() == 0 || batch_size_ == 0) throw std::invalid_argument("sampler: empty dataset or batch");
}

Batch MinibatchSampler::next() {
  Batch b{Matrix(batch_size_, coords_.cols()), Matrix(batch_size_, targets_.cols())};
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const std::size_t r = rng_.below(coords_.rows());
    std::copy_n(coords_.row(r).data(), coords_.cols(), b.coords.row(i).data());
    std::copy_n(targets_.row(r).data(), targets_.cols(), b.targets.row(i).data());
  }
  return b;
}

std::string log_csv(std::span<const LogEntry> log) {
  CsvBuilder csv({"iteration", "loss", "metric"});
  for (const auto& e : log) csv.row(static_cast<long long>(e.iteration), {e.loss, e.metric});
  return csv.str();
}

FitResult fit(NetworkState net, Sampler& sampler, const TrainConfig& cfg, const std::optional<FreezeMask>& freeze,
              const MetricFn& metric) {
  cfg.validate();
  net.validate();
  if (freeze && !freeze->matches(net)) throw std::invalid_argument("fit: freeze mask does not match the network");

  FitResult result;
  AdamState adam = AdamState::zeros(net);
  const std::size_t layers = net.num_layers();
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const Batch batch = sampler.next();
    double loss = 0.0;
    Gradients grads;
    try {
      const Tape tape = forward_with_tape(net, batch.coords);
      LossResult l2 = l2_loss(tape.output(), batch.targets);
      loss = l2.loss;
      if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss");
      grads = backward(net, tape, l2.grad);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("fit: iteration " + std::to_string(t) + ": " + e.what());
    }

    const double lr = cfg.lr_at(t);
    for (std::size_t l = 0; l < layers; ++l) {
      std::span<const std::uint8_t> wmask, bmask;
      if (freeze) {
        wmask = freeze->weights[l];
        bmask = freeze->biases[l];
      }
      adam_step(net.weights[l].values(), grads.weights[l].values(), adam.m_weights[l], adam.v_weights[l], t, cfg,
                lr, wmask);
      adam_step(net.biases[l], grads.biases[l], adam.m_biases[l], adam.v_biases[l], t, cfg, lr, bmask);
    }
    adam.step = t;

    if ((cfg.log_every > 0 && t % cfg.log_every == 0) || t == cfg.iterations) {
      const double m = metric ? metric(net) : -10.0 * std::log10(loss);
      result.log.push_back({t, loss, m});
    }
  }
  result.net = std::move(net);
  return result;
}

StreamResult stream_fit(NetworkState net0, const std::vector<StagePlan>& plan, Sampler& sampler,
                        const TrainConfig& cfg, const InitScheme& scheme, const MetricFn& metric) {
  if (plan.empty()) throw std::invalid_argument("stream_fit: empty stage plan");
  for (std::size_t s = 1; s < plan.size(); ++s)
    if (plan[s].width <= plan[s - 1].width) throw std::invalid_argument("stream_fit: stage widths must increase");
  const auto width0 = net0.uniform_hidden_width();
  if (!width0 || *width0 != plan.front().width)
    throw std::invalid_argument("stream_fit: initial network width must equal the first stage width");

  StreamResult out;
  NetworkState net = std::move(net0);
  for (std::size_t s = 0; s < plan.size(); ++s) {
    TrainConfig stage_cfg = cfg;
    stage_cfg.iterations = plan[s].iterations;
    std::optional<FreezeMask> freeze;
    if (s > 0) {
      InitScheme stage_scheme = scheme;
      stage_scheme.ring = plan[s].ring;
      Rng rng = Rng::child(cfg.seed, 1000 + s);
      NetworkState widened = widen(net, plan[s].width, stage_scheme, rng);
      freeze = FreezeMask::existing(net, widened);
      net = std::move(widened);
    }
    FitResult r = fit(std::move(net), sampler, stage_cfg, freeze, metric);
    net = std::move(r.net);
    out.stages.push_back({plan[s].width, net, std::move(r.log)});
  }
  out.net = std::move(net);
  return out;
}

}  // namespace finer
