#pragma once

// Branch-free sin/cos/exp built from fma so GCC can vectorise the loops
// that call them. Scalar and vector code run the same operations, so a
// value does not depend on where in a batch it sits.

#include <bit>
#include <cmath>
#include <cstdint>

namespace finer::fastmath {

struct SinCos {
  double s;
  double c;
};

// Up to this magnitude n * pio2_1 below is exact (n < 2^20).
inline constexpr double kTrigLimit = 1.0e6;

inline double round_to_int(double x) {
  constexpr double magic = 6755399441055744.0;  // 1.5 * 2^52
  return (x + magic) - magic;
}

inline SinCos sincos_reduced(double a) {
  constexpr double two_over_pi = 6.36619772367581382433e-01;
  constexpr double pio2_1 = 1.57079632673412561417e+00;   // first 33 bits
  constexpr double pio2_2 = 6.07710050630396597660e-11;   // next 33 bits
  constexpr double pio2_2t = 2.02226624879595063154e-21;  // pi/2 - pio2_1 - pio2_2
  const double n = round_to_int(a * two_over_pi);
  double r = std::fma(-n, pio2_1, a);
  r = std::fma(-n, pio2_2, r);
  r = std::fma(-n, pio2_2t, r);
  const double z = r * r;

  double ps = 1.58969099521155010221e-10;
  ps = std::fma(ps, z, -2.50507602534068634195e-08);
  ps = std::fma(ps, z, 2.75573137070700676789e-06);
  ps = std::fma(ps, z, -1.98412698298579493134e-04);
  ps = std::fma(ps, z, 8.33333333332248946124e-03);
  ps = std::fma(ps, z, -1.66666666666666324348e-01);
  const double s = std::fma(r * z, ps, r);

  double pc = -1.13596475577881948265e-11;
  pc = std::fma(pc, z, 2.08757232129817482790e-09);
  pc = std::fma(pc, z, -2.75573143513906633035e-07);
  pc = std::fma(pc, z, 2.48015872894767294178e-05);
  pc = std::fma(pc, z, -1.38888888888741095749e-03);
  pc = std::fma(pc, z, 4.16666666666666019037e-02);
  const double c = std::fma(z * z, pc, std::fma(-0.5, z, 1.0));

  // quadrant selection on bits keeps the loop free of branches
  const std::uint64_t q = static_cast<std::uint64_t>(static_cast<std::int64_t>(n));
  const std::uint64_t swap = 0 - (q & 1);
  const std::uint64_t sb = std::bit_cast<std::uint64_t>(s), cb = std::bit_cast<std::uint64_t>(c);
  const std::uint64_t sin_bits = ((sb & ~swap) | (cb & swap)) ^ ((q & 2) << 62);
  const std::uint64_t cos_bits = ((cb & ~swap) | (sb & swap)) ^ (((q + 1) & 2) << 62);
  return {std::bit_cast<double>(sin_bits), std::bit_cast<double>(cos_bits)};
}

/// sin and cos for any finite argument; large ones go to the C library.
inline SinCos sincos(double a) {
  if (std::abs(a) <= kTrigLimit) return sincos_reduced(a);
  return {std::sin(a), std::cos(a)};
}

/// exp(x) for x <= 0; underflows to 0 below -708.
inline double exp_nonpositive(double x) {
  constexpr double log2e = 1.44269504088896338700e+00;
  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  const std::uint64_t keep = 0 - static_cast<std::uint64_t>(x >= -708.0);
  const double xc = std::bit_cast<double>((std::bit_cast<std::uint64_t>(x) & keep) |
                                          (std::bit_cast<std::uint64_t>(-708.0) & ~keep));
  const double n = round_to_int(xc * log2e);
  double r = std::fma(-n, ln2_hi, xc);
  r = std::fma(-n, ln2_lo, r);
  // Taylor series to degree 13; |r| <= 0.35
  double p = 1.0 / 6227020800.0;
  p = std::fma(p, r, 1.0 / 479001600.0);
  p = std::fma(p, r, 1.0 / 39916800.0);
  p = std::fma(p, r, 1.0 / 3628800.0);
  p = std::fma(p, r, 1.0 / 362880.0);
  p = std::fma(p, r, 1.0 / 40320.0);
  p = std::fma(p, r, 1.0 / 5040.0);
  p = std::fma(p, r, 1.0 / 720.0);
  p = std::fma(p, r, 1.0 / 120.0);
  p = std::fma(p, r, 1.0 / 24.0);
  p = std::fma(p, r, 1.0 / 6.0);
  p = std::fma(p, r, 0.5);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);
  const std::int64_t bits = (static_cast<std::int64_t>(n) + 1023) << 52;
  return std::bit_cast<double>(std::bit_cast<std::uint64_t>(p * std::bit_cast<double>(bits)) & keep);
}

}  // namespace finer::fastmath
