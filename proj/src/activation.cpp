#include "finer/activation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fastmath.hpp"
#include "finer/csv.hpp"

namespace finer {

std::string_view to_string(Backbone b) {
  switch (b) {
    case Backbone::Sine: return "sine";
    case Backbone::Gauss: return "gauss";
    case Backbone::WaveletReal: return "wavelet";
    case Backbone::Relu: return "relu";
  }
  return "unknown";
}

Backbone parse_backbone(std::string_view name) {
  if (name == "sine") return Backbone::Sine;
  if (name == "gauss") return Backbone::Gauss;
  if (name == "wavelet") return Backbone::WaveletReal;
  if (name == "relu") return Backbone::Relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void ActivationSpec::validate() const {
  const bool uses_omega0 = backbone == Backbone::Sine || backbone == Backbone::WaveletReal;
  const bool uses_s0 = backbone == Backbone::Gauss || backbone == Backbone::WaveletReal;
  if (uses_omega0 && !(omega0 > 0.0 && std::isfinite(omega0)))
    throw std::invalid_argument("activation: omega0 must be positive");
  if (uses_s0 && !(s0 > 0.0 && std::isfinite(s0)))
    throw std::invalid_argument("activation: s0 must be positive");
  if (finer) {
    if (backbone == Backbone::Relu)
      throw std::invalid_argument("activation: the variable-periodic extension needs a continuous backbone; relu is piecewise");
    if (backbone != Backbone::Sine && !(omega_f > 0.0 && std::isfinite(omega_f)))
      throw std::invalid_argument("activation: omega_f must be positive");
  }
}

namespace {

void require_finite(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("activation: non-finite input");
}

// Evaluators return value and derivative. The inner map v = (|x|+1) x has
// dv/dx = 2|x| + 1, equal to 1 at the origin. Trig selects the sin/cos
// kernel: Reduced is the vectorisable one, valid while trig_arg stays
// within fastmath::kTrigLimit; Exact covers every finite argument and
// agrees with Reduced bit for bit inside that range.

struct ReducedTrig {
  static fastmath::SinCos sc(double a) { return fastmath::sincos_reduced(a); }
};
struct ExactTrig {
  static fastmath::SinCos sc(double a) { return fastmath::sincos(a); }
};

inline double gaussian(double a) { return fastmath::exp_nonpositive(-a * a); }

struct Sine {
  double w0;
  template <class T>
  ActValue eval(double x) const {
    const auto t = T::sc(w0 * x);
    return {t.s, w0 * t.c};
  }
  double trig_arg(double x) const { return w0 * x; }
};

struct SineFiner {
  double w0;
  template <class T>
  ActValue eval(double x) const {
    const double ax = std::abs(x);
    const auto t = T::sc(w0 * ((ax + 1.0) * x));
    return {t.s, w0 * (2.0 * ax + 1.0) * t.c};
  }
  double trig_arg(double x) const { return w0 * ((std::abs(x) + 1.0) * x); }
};

struct Gauss {
  double s0;
  template <class>
  ActValue eval(double x) const {
    const double a = s0 * x;
    const double g = gaussian(a);
    return {g, -2.0 * s0 * a * g};
  }
  double trig_arg(double) const { return 0.0; }
};

struct Wavelet {
  double w0, s0;
  template <class T>
  ActValue eval(double x) const {
    const double a = s0 * x;
    const double g = gaussian(a);
    const auto t = T::sc(w0 * x);
    return {t.c * g, (-w0 * t.s - 2.0 * s0 * a * t.c) * g};
  }
  double trig_arg(double x) const { return w0 * x; }
};

// u = sin(omega_f (|x|+1) x) feeds a Gauss or Wavelet with scales / omega_f.
template <class Outer>
struct Wrapped {
  double wf;
  Outer outer;
  template <class T>
  ActValue eval(double x) const {
    const double ax = std::abs(x);
    const auto t = T::sc(wf * ((ax + 1.0) * x));
    const ActValue o = outer.template eval<T>(t.s);
    return {o.value, o.deriv * (wf * (2.0 * ax + 1.0) * t.c)};
  }
  double trig_arg(double x) const {
    return std::max(std::abs(wf * ((std::abs(x) + 1.0) * x)), std::abs(outer.trig_arg(1.0)));
  }
};

struct Relu {
  template <class>
  ActValue eval(double x) const {
    return {x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0};
  }
  double trig_arg(double) const { return 0.0; }
};

template <class E>
void apply(const E& e, std::span<const double> x, std::span<double> value, std::span<double> deriv) {
  const std::size_t n = x.size();
  if (deriv.empty()) {
    for (std::size_t i = 0; i < n; ++i) value[i] = e.template eval<ReducedTrig>(x[i]).value;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const ActValue r = e.template eval<ReducedTrig>(x[i]);
      value[i] = r.value;
      deriv[i] = r.deriv;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(e.trig_arg(x[i])) <= fastmath::kTrigLimit) continue;
    const ActValue r = e.template eval<ExactTrig>(x[i]);
    value[i] = r.value;
    if (!deriv.empty()) deriv[i] = r.deriv;
  }
}

template <class F>
decltype(auto) dispatch(const ActivationSpec& spec, F&& f) {
  const double w0 = spec.omega0, s0 = spec.s0, wf = spec.omega_f;
  switch (spec.backbone) {
    case Backbone::Sine:
      return spec.finer ? f(SineFiner{w0}) : f(Sine{w0});
    case Backbone::Gauss:
      return spec.finer ? f(Wrapped<Gauss>{wf, Gauss{s0 / wf}}) : f(Gauss{s0});
    case Backbone::WaveletReal:
      return spec.finer ? f(Wrapped<Wavelet>{wf, Wavelet{w0 / wf, s0 / wf}}) : f(Wavelet{w0, s0});
    case Backbone::Relu:
      return f(Relu{});
  }
  throw std::logic_error("act: unhandled backbone");
}

}  // namespace

ActValue act_with_deriv(const ActivationSpec& spec, double x) {
  require_finite(x);
  return dispatch(spec, [x](const auto& e) { return e.template eval<ExactTrig>(x); });
}

double act(const ActivationSpec& spec, double x) { return act_with_deriv(spec, x).value; }

double act_deriv(const ActivationSpec& spec, double x) { return act_with_deriv(spec, x).deriv; }

void act_batch(const ActivationSpec& spec, std::span<const double> x, std::span<double> value,
               std::span<double> deriv) {
  if (value.size() != x.size() || (!deriv.empty() && deriv.size() != x.size()))
    throw std::invalid_argument("act_batch: span length mismatch");
  dispatch(spec, [&](const auto& e) { apply(e, x, value, deriv); });
}

double subfunction_boundary(unsigned m) {
  return (std::sqrt(4.0 * m * std::numbers::pi + 1.0) - 1.0) / 2.0;
}

FrequencyScaleConstants frequency_scale_constants() {
  const double r1 = std::sqrt(4.0 * std::numbers::pi + 1.0);
  const double r3 = std::sqrt(12.0 * std::numbers::pi + 1.0);
  return {2.0 * std::numbers::pi / (r1 - 1.0), (r1 - 1.0) / (r3 - r1)};
}

std::vector<CurvePoint> sample_curve(const ActivationSpec& spec, double lo, double hi, std::size_t n) {
  spec.validate();
  if (!(lo < hi)) throw std::invalid_argument("sample_curve: need lo < hi");
  if (n < 2) throw std::invalid_argument("sample_curve: need n >= 2");
  std::vector<CurvePoint> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i + 1 == n ? hi : lo + step * static_cast<double>(i);
    out[i] = {x, act(spec, x)};
  }
  return out;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  CsvBuilder csv({"x", "y"});
  for (const auto& p : curve) csv.row({p.x, p.y});
  return csv.str();
}

}  // namespace finer
