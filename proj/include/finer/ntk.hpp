#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "finer/activation.hpp"
#include "finer/matrix.hpp"
#include "finer/network.hpp"

namespace finer {

inline constexpr double kDefaultEigenThreshold = 1.0;

struct NtkReport {
  Matrix kernel;
  Vector eigenvalues;  // ascending
  double diag_dominance = 0.0;
  std::size_t count_above = 0;
  double threshold = kDefaultEigenThreshold;
  double k_bias = 0.0;
  std::size_t n_samples = 0;
  /// Rule used for every layer, the output layer included.
  WeightRule output_weight_rule = WeightRule::SirenUniform;
};

/// n evenly spaced points on [-1, 1] (endpoints included) as an n x 1 matrix.
Matrix ntk_probe_grid(std::size_t n);

/// mean(diag) / mean(|off-diagonal|); +infinity without off-diagonal mass.
double diag_dominance(const Matrix& k);

/// Fills eigenvalues, diag_dominance and count_above from report.kernel.
void finalize_report(NtkReport& report);

/// Monte Carlo average over n_samples networks (sample s initialised from
/// Rng::child(seed, s)) of the Gram matrix of all-parameter gradients of
/// the scalar output at the probes.
NtkReport ntk_empirical(const std::vector<std::size_t>& layer_dims, const ActivationSpec& activation,
                        const InitScheme& scheme, const Matrix& probes, std::size_t n_samples, std::uint64_t seed,
                        double threshold = kDefaultEigenThreshold);

/// Closed form for f(x) = sum_k c_k sigma(w_k x + b_k) + d with
/// sigma(z) = sin(omega0 (|z|+1) z), averaged over the same draws as
/// ntk_empirical on [1, width, 1]:
///   (x_i x_j + 1) sum_k c_k^2 omega0^2 (2|g_i|+1)(2|g_j|+1) cos(omega0 (|g_i|+1) g_i) cos(omega0 (|g_j|+1) g_j)
/// with g = w_k x + b_k. With include_output_layer the gradients of c_k
/// and d are added: sum_k sigma(g_i) sigma(g_j) + 1.
Matrix ntk_analytic_1hidden(std::size_t width, const ActivationSpec& activation, const InitScheme& scheme,
                            std::span<const double> probes, std::size_t n_samples, std::uint64_t seed,
                            bool include_output_layer = false);

/// One ntk_empirical report per k (hidden bias range), same seed family.
std::vector<NtkReport> ntk_sweep(const std::vector<std::size_t>& layer_dims, const ActivationSpec& activation,
                                 const InitScheme& scheme, std::span<const double> k_values, const Matrix& probes,
                                 std::size_t n_samples, std::uint64_t seed,
                                 double threshold = kDefaultEigenThreshold);

/// Dense kernel with header c0,c1,...
std::string kernel_csv(const Matrix& k);
/// index,eigenvalue
std::string eigenvalues_csv(std::span<const double> eigenvalues);
/// k,diag_dominance,count_above
std::string sweep_summary_csv(std::span<const NtkReport> reports);

}  // namespace finer
