#include "finer/ntk.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "finer/csv.hpp"
#include "finer/symmetric_eigen.hpp"

namespace finer {

Matrix ntk_probe_grid(std::size_t n) {
  if (n == 0) throw std::invalid_argument("ntk: need at least one probe");
  Matrix p(n, 1);
  if (n == 1) return p;
  for (std::size_t i = 0; i < n; ++i) p(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  return p;
}

double diag_dominance(const Matrix& k) {
  const std::size_t n = k.rows();
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j)
        diag += k(i, j);
      else
        off += std::abs(k(i, j));
    }
  if (n < 2 || off == 0.0) return std::numeric_limits<double>::infinity();
  return (diag / n) / (off / static_cast<double>(n * (n - 1)));
}

void finalize_report(NtkReport& r) {
  r.eigenvalues = eig_symmetric(r.kernel).eigenvalues;
  r.diag_dominance = diag_dominance(r.kernel);
  r.count_above = 0;
  for (double e : r.eigenvalues) r.count_above += e > r.threshold;
}

NtkReport ntk_empirical(const std::vector<std::size_t>& layer_dims, const ActivationSpec& activation,
                        const InitScheme& scheme, const Matrix& probes, std::size_t n_samples, std::uint64_t seed,
                        double threshold) {
  if (n_samples == 0) throw std::invalid_argument("ntk_empirical: n_samples must be >= 1");
  if (probes.rows() == 0) throw std::invalid_argument("ntk_empirical: no probes");
  if (layer_dims.empty() || layer_dims.back() != 1)
    throw std::invalid_argument("ntk_empirical: network output must be scalar");

  const std::size_t n = probes.rows();
  Matrix sum(n, n);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng rng = Rng::child(seed, s);
    const NetworkState net = init_network(layer_dims, activation, scheme, rng);
    const Matrix jac = parameter_jacobian(net, forward_with_tape(net, probes));
    if (!jac.all_finite())
      throw std::runtime_error("ntk_empirical: non-finite gradient in sample " + std::to_string(s));
    const Matrix gram = matmul_bt(jac, jac);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += gram.values()[i];
  }
  for (double& v : sum.values()) v /= static_cast<double>(n_samples);
  // Gram products are symmetric up to rounding; make it exact.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum(j, i) = sum(i, j);

  NtkReport r;
  r.kernel = std::move(sum);
  r.threshold = threshold;
  r.k_bias = scheme.k_bias;
  r.n_samples = n_samples;
  r.output_weight_rule = scheme.weight_rule;
  finalize_report(r);
  return r;
}

Matrix ntk_analytic_1hidden(std::size_t width, const ActivationSpec& activation, const InitScheme& scheme,
                            std::span<const double> probes, std::size_t n_samples, std::uint64_t seed,
                            bool include_output_layer) {
  if (activation.backbone != Backbone::Sine || !activation.finer)
    throw std::invalid_argument("ntk_analytic_1hidden: closed form covers the Sine backbone with the extension only");
  if (width == 0 || n_samples == 0 || probes.empty())
    throw std::invalid_argument("ntk_analytic_1hidden: width, n_samples and probes must be non-empty");

  const std::size_t n = probes.size();
  const double w0 = activation.omega0;
  Matrix sum(n, n);
  Vector scale(n), sign(n), value(n);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng rng = Rng::child(seed, s);
    const NetworkState net = init_network({1, width, 1}, activation, scheme, rng);
    for (std::size_t k = 0; k < width; ++k) {
      const double w = net.weights[0](k, 0), b = net.biases[0][k], c = net.weights[1](0, k);
      for (std::size_t i = 0; i < n; ++i) {
        const double g = w * probes[i] + b;
        const double phase = w0 * (std::abs(g) + 1.0) * g;
        scale[i] = 2.0 * std::abs(g) + 1.0;
        sign[i] = std::cos(phase);
        value[i] = std::sin(phase);
      }
      const double c2 = c * c * w0 * w0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double term = (probes[i] * probes[j] + 1.0) * c2 * scale[i] * scale[j] * sign[i] * sign[j];
          if (include_output_layer) term += value[i] * value[j];
          sum(i, j) += term;
        }
    }
    if (include_output_layer)
      for (double& v : sum.values()) v += 1.0;
  }
  for (double& v : sum.values()) v /= static_cast<double>(n_samples);
  return sum;
}

std::vector<NtkReport> ntk_sweep(const std::vector<std::size_t>& layer_dims, const ActivationSpec& activation,
                                 const InitScheme& scheme, std::span<const double> k_values, const Matrix& probes,
                                 std::size_t n_samples, std::uint64_t seed, double threshold) {
  if (k_values.empty()) throw std::invalid_argument("ntk_sweep: k_values is empty");
  std::vector<NtkReport> out;
  for (double k : k_values) {
    InitScheme s = scheme;
    s.k_bias = k;
    out.push_back(ntk_empirical(layer_dims, activation, s, probes, n_samples, seed, threshold));
  }
  return out;
}

std::string kernel_csv(const Matrix& k) {
  std::string header;
  for (std::size_t j = 0; j < k.cols(); ++j) header += (j ? ",c" : "c") + std::to_string(j);
  std::string out = header + "\n";
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = 0; j < k.cols(); ++j) {
      if (j) out += ',';
      out += format_double(k(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string eigenvalues_csv(std::span<const double> eigenvalues) {
  CsvBuilder csv({"index", "eigenvalue"});
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) csv.row(static_cast<long long>(i), {eigenvalues[i]});
  return csv.str();
}

std::string sweep_summary_csv(std::span<const NtkReport> reports) {
  CsvBuilder csv({"k", "diag_dominance", "count_above"});
  for (const auto& r : reports) csv.row({r.k_bias, r.diag_dominance, static_cast<double>(r.count_above)});
  return csv.str();
}

}  // namespace finer
