#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finer/matrix.hpp"
#include "finer/network.hpp"
#include "finer/rng.hpp"

namespace finer {

struct TrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t iterations = 1000;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  /// Learning rate reached at the last iteration, as a fraction of lr;
  /// decays exponentially in between. 1 disables the schedule.
  double lr_final_fraction = 1.0;

  void validate() const;
  double lr_at(std::size_t t) const;
};

/// One Adam update with bias correction; t is the 1-based step index.
/// Elements whose mask entry is nonzero are skipped entirely (parameter and
/// both moments untouched). mask may be empty.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, std::size_t t, const TrainConfig& cfg, double lr,
               std::span<const std::uint8_t> mask = {});
inline void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                      std::span<double> v, std::size_t t, const TrainConfig& cfg) {
  adam_step(params, grads, m, v, t, cfg, cfg.lr);
}

struct LossResult {
  double loss;
  Matrix grad;
};

/// Mean squared error over all entries, with gradient 2 (pred - target) / N.
LossResult l2_loss(const Matrix& pred, const Matrix& target);

/// Nonzero marks a frozen parameter. Shapes mirror the network.
struct FreezeMask {
  std::vector<std::vector<std::uint8_t>> weights;
  std::vector<std::vector<std::uint8_t>> biases;

  static FreezeMask none(const NetworkState& net);
  static FreezeMask all(const NetworkState& net);
  /// Freezes the entries of `widened` that existed in `previous` (its
  /// top-left blocks), leaving the added ones trainable.
  static FreezeMask existing(const NetworkState& previous, const NetworkState& widened);

  bool matches(const NetworkState& net) const;
};

/// Adam first and second moments, shaped like the network.
struct AdamState {
  std::vector<Vector> m_weights, v_weights, m_biases, v_biases;
  std::size_t step = 0;

  static AdamState zeros(const NetworkState& net);
};

struct Batch {
  Matrix coords;
  Matrix targets;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual Batch next() = 0;
};

/// Returns the whole dataset every call.
class FullBatchSampler final : public Sampler {
 public:
  FullBatchSampler(Matrix coords, Matrix targets);
  Batch next() override { return {coords_, targets_}; }

 private:
  Matrix coords_, targets_;
};

/// batch_size rows drawn uniformly with replacement.
class MinibatchSampler final : public Sampler {
 public:
  MinibatchSampler(Matrix coords, Matrix targets, std::size_t batch_size, std::uint64_t seed);
  Batch next() override;

 private:
  Matrix coords_, targets_;
  std::size_t batch_size_;
  Rng rng_;
};

struct LogEntry {
  std::size_t iteration;
  double loss;
  double metric;
};

/// "iteration,loss,metric" CSV.
std::string log_csv(std::span<const LogEntry> log);

/// Evaluated at log points; defaults to -10 log10(batch loss).
using MetricFn = std::function<double(const NetworkState&)>;

struct FitResult {
  NetworkState net;
  std::vector<LogEntry> log;
};

/// Runs cfg.iterations Adam steps on L2 loss over batches from the sampler.
/// Logs after every log_every-th step and after the last one. Throws
/// std::runtime_error naming the iteration if the loss stops being finite.
FitResult fit(NetworkState net, Sampler& sampler, const TrainConfig& cfg,
              const std::optional<FreezeMask>& freeze = std::nullopt, const MetricFn& metric = {});

struct StagePlan {
  std::size_t width;
  std::size_t iterations;
  std::optional<BiasRing> ring;
};

struct StageResult {
  std::size_t width;
  /// Network at the end of the stage.
  NetworkState net;
  std::vector<LogEntry> log;
};

struct StreamResult {
  NetworkState net;
  std::vector<StageResult> stages;
};

/// Progressive training: the first stage trains net0; each later stage
/// widens with that stage's ring (weights per `scheme`), freezes everything
/// that existed before, and trains only the added parameters.
StreamResult stream_fit(NetworkState net0, const std::vector<StagePlan>& plan, Sampler& sampler,
                        const TrainConfig& cfg, const InitScheme& scheme, const MetricFn& metric = {});

}  // namespace finer
