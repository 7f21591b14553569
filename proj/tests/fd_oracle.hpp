#pragma once

// Central finite differences over every parameter of a network.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "finer/network.hpp"

namespace finer::testing {

inline constexpr double kFdStep = 1e-6;
inline constexpr double kFdRelTol = 1e-5;
// Rounding in the two forward passes leaves about eps * S / h of noise in a
// central difference, S being the summed magnitude of the output terms.
inline constexpr double kFdNoiseUlps = 8.0;

inline bool fd_close(double analytic, double fd, double noise) {
  return std::abs(analytic - fd) <= kFdRelTol * std::max(std::abs(analytic), std::abs(fd)) + noise;
}

// Scalar output f(x) of a 1-row input.
inline double scalar_output(const NetworkState& net, const Matrix& x) { return forward(net, x)(0, 0); }

// Smallest |pre-activation| over the hidden layers for a 1-row input.
inline double min_abs_pre(const NetworkState& net, const Matrix& x) {
  const Tape t = forward_with_tape(net, x);
  double m = INFINITY;
  for (std::size_t l = 0; l + 1 < t.pre.size(); ++l)
    for (double v : t.pre[l].values()) m = std::min(m, std::abs(v));
  return m;
}

// sum_k |W_out[k] h_k| + |b_out| for a 1-row input.
inline double output_term_sum(const NetworkState& net, const Matrix& x) {
  const Tape t = forward_with_tape(net, x);
  const Matrix& h = t.post[t.post.size() - 2];
  double s = std::abs(net.biases.back()[0]);
  for (std::size_t k = 0; k < h.cols(); ++k) s += std::abs(net.weights.back()(0, k) * h(0, k));
  return s;
}

struct FdReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  // |analytic - fd| / (tol * max(|analytic|, |fd|) + noise); <= 1 passes
  double worst_ratio = 0.0;
  std::string first_failure;
};

// Compares backward() for a scalar-output net at one input row against
// central differences of every parameter and input coordinate.
inline FdReport check_gradients(NetworkState net, const Matrix& x) {
  FdReport rep;
  const Tape tape = forward_with_tape(net, x);
  const Gradients g = backward(net, tape, Matrix(1, 1, 1.0));
  const double noise = kFdNoiseUlps * std::numeric_limits<double>::epsilon() * output_term_sum(net, x) / kFdStep;
  auto compare = [&](double analytic, double fd, const std::string& what) {
    ++rep.checked;
    const double allowed = kFdRelTol * std::max(std::abs(analytic), std::abs(fd)) + noise;
    rep.worst_ratio = std::max(rep.worst_ratio, std::abs(analytic - fd) / allowed);
    if (!fd_close(analytic, fd, noise)) {
      if (rep.failed++ == 0)
        rep.first_failure = what + ": analytic " + std::to_string(analytic) + " fd " + std::to_string(fd);
    }
  };
  auto central = [&](double& slot) {
    const double keep = slot;
    slot = keep + kFdStep;
    const double up = scalar_output(net, x);
    slot = keep - kFdStep;
    const double down = scalar_output(net, x);
    slot = keep;
    return (up - down) / (2.0 * kFdStep);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].size(); ++i)
      compare(g.weights[l].values()[i], central(net.weights[l].values()[i]),
              "W" + std::to_string(l + 1) + "[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < net.biases[l].size(); ++i)
      compare(g.biases[l][i], central(net.biases[l][i]), "b" + std::to_string(l + 1) + "[" + std::to_string(i) + "]");
  }
  Matrix xi = x;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double keep = xi(0, c);
    xi(0, c) = keep + kFdStep;
    const double up = scalar_output(net, xi);
    xi(0, c) = keep - kFdStep;
    const double down = scalar_output(net, xi);
    xi(0, c) = keep;
    compare(g.input(0, c), (up - down) / (2.0 * kFdStep), "x[" + std::to_string(c) + "]");
  }
  return rep;
}

}  // namespace finer::testing
