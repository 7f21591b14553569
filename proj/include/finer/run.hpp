#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "finer/network.hpp"
#include "finer/tasks.hpp"
#include "finer/training.hpp"

namespace finer {

enum class Task { FitImage, FitSdf, FitSignal, NtkSweep, Stream, Gap, Curves, NeuronFreq };

std::string_view to_string(Task t);
Task parse_task(std::string_view name);


/// Everything a run needs. Keys of the JSON form match the CLI flag names.
struct RunConfig {
  Task task = Task::FitImage;

  // Unset fields below take per-task defaults in resolved(): ntk-sweep
  // probes the one-hidden-layer Sine+FINER net with omega0 = 1, everything
  // else defaults to plain backbones with omega0 = 30 and 3 hidden layers.
  std::string activation = "sine";
  std::optional<bool> finer;
  std::optional<double> omega0;
  double s0 = 10.0;
  double omegaf = 2.5;

  /// Unset: the task preset for the backbone (image or SDF).
  std::optional<double> k;
  /// Unset: the backbone default.
  std::optional<std::string> weight_rule;
  InitPreset init = InitPreset::Literal;
  /// First-layer weight bound; unset keeps weight_rule.
  std::optional<double> first_bound;
  std::optional<double> deep_gain;
  std::optional<double> deep_k;

  std::optional<std::size_t> layers;
  std::size_t width = 256;
  std::size_t iters = 1000;
  double lr = 1e-4;
  std::size_t batch = 0;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  double lr_final = 1.0;

  std::string input;
  std::string outdir = "out";

  std::vector<double> k_list{1, 5, 10, 20};
  /// width:iters pairs; the first width is the initial network.
  std::string stages = "32:1000,64:1000,128:1000";
  std::size_t eval_grid = 64;

  std::string sdf = "sphere:0.5";
  std::size_t n_train = 10000;
  std::size_t probes = 128;
  std::size_t samples = 500;

  double range_lo = -20.0;
  double range_hi = 20.0;
  /// Samples: curve points (default 4001), neuron-freq probe length (1024),
  /// fit-signal points (1024).
  std::optional<std::size_t> n;
  std::size_t axis = 0;

  /// Copy with every optional that has a per-task default filled in.
  RunConfig resolved() const;

  // The accessors below expect a resolved config.
  ActivationSpec activation_spec() const;
  /// Resolves the preset and optional fields into a concrete scheme.
  InitScheme init_scheme() const;
  TrainConfig train_config() const;
  Architecture architecture() const { return {layers.value(), width}; }
  std::vector<StagePlan> stage_plan() const;

  void validate() const;
};

/// Flat JSON object; every field is written, unset optionals as null.
std::string config_json(const RunConfig& cfg);
/// Applies the keys present in `json` on top of `base`. Unknown keys throw.
RunConfig apply_config_json(RunConfig base, const std::string& json);

/// Parses argv (flags, optionally --config FILE read first so flags win).
/// Throws std::invalid_argument on bad usage; returns nullopt after --help.
std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::string* help_text = nullptr);

/// Runs the task, writing config.json plus its outputs under cfg.outdir.
void run(const RunConfig& cfg);

/// Entry point for the executable: one-line JSON error on stderr, exit 1
/// for runtime failures and 2 for usage errors.
int run_main(int argc, const char* const* argv);

}  // namespace finer
