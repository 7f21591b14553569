#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace finer {

enum class Backbone { Sine, Gauss, WaveletReal, Relu };

std::string_view to_string(Backbone b);
/// Accepts "sine", "gauss", "wavelet" (and "relu", which only validates
/// without the variable-periodic extension).
Backbone parse_backbone(std::string_view name);

/// One activation: a backbone plus its scale parameters, optionally wrapped
/// in the variable-periodic extension.
///
///   Sine         sin(omega0 * x)                finer: x -> (|x|+1) x
///   Gauss        exp(-(s0 x)^2)                 finer: x -> u = sin(omega_f (|x|+1) x),
///   WaveletReal  cos(omega0 x) exp(-(s0 x)^2)          scales divided by omega_f
struct ActivationSpec {
  Backbone backbone = Backbone::Sine;
  bool finer = false;
  double omega0 = 30.0;
  double s0 = 10.0;
  double omega_f = 2.5;

  /// Throws std::invalid_argument when a used scale is not positive or a
  /// piecewise backbone is combined with the extension.
  void validate() const;

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

inline constexpr double kDefaultOmegaF = 2.5;

double act(const ActivationSpec& spec, double x);

/// d act / dx. At x = 0 the inner map (|x|+1) x has derivative 1, which is
/// the value used there.
double act_deriv(const ActivationSpec& spec, double x);

/// Value and derivative together; same results as act / act_deriv.
struct ActValue {
  double value;
  double deriv;
};
ActValue act_with_deriv(const ActivationSpec& spec, double x);

/// Elementwise act over x into value; when deriv is non-empty it receives
/// act_deriv. Spans must have equal length (deriv may be empty). Inputs are
/// not checked for finiteness here; callers validate pre-activations.
void act_batch(const ActivationSpec& spec, std::span<const double> x, std::span<double> value,
               std::span<double> deriv);

/// x_m = (sqrt(4 m pi + 1) - 1) / 2, the m-th nonnegative zero of
/// sin((|x|+1) x).
double subfunction_boundary(unsigned m);

struct FrequencyScaleConstants {
  double first;   // 2 pi / (sqrt(4 pi + 1) - 1)
  double second;  // (sqrt(4 pi + 1) - 1) / (sqrt(12 pi + 1) - sqrt(4 pi + 1))
};
FrequencyScaleConstants frequency_scale_constants();

struct CurvePoint {
  double x;
  double y;
};
/// n evenly spaced samples on [lo, hi], endpoints included.
std::vector<CurvePoint> sample_curve(const ActivationSpec& spec, double lo, double hi, std::size_t n);

/// Two-column CSV "x,y" with 17 significant digits.
std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace finer
