#pragma once

#include <cstddef>
#include <cstdint>

#include "finer/matrix.hpp"

namespace finer {

/// PCG-XSH-RR 64/32 (O'Neill, pcg32). The 64-bit LCG state advances with
/// multiplier 6364136223846793005 and an odd increment derived from the
/// stream id; seeding follows the reference pcg32_srandom_r. Doubles take
/// 53 bits from two consecutive outputs, so streams are identical on every
/// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  /// Independent generator for (seed, index); used wherever work is split
  /// into samples or stages so results do not depend on evaluation order.
  static Rng child(std::uint64_t seed, std::uint64_t index);

  std::uint32_t next_u32();
  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double();
  /// Uniform in [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

/// n i.i.d. draws from U[lo, hi). Throws std::invalid_argument if lo > hi.
Vector uniform_fill(Rng& rng, double lo, double hi, std::size_t n);

}  // namespace finer
