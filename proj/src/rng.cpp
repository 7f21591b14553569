#include "finer/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace finer {

namespace {
constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;

// SplitMix64 finaliser; decorrelates nearby (seed, index) pairs.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  state_ = 0;
  inc_ = (stream << 1u) | 1u;
  next_u32();
  state_ += seed;
  next_u32();
}

Rng Rng::child(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix64(seed ^ mix64(index)), index);
}

std::uint32_t Rng::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * kMultiplier + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Rng::next_double() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  const std::uint64_t bits = ((hi << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  const double v = lo + (hi - lo) * next_double();
  // Rounding in lo + (hi - lo) * u can land on hi.
  return v < hi ? v : std::nextafter(hi, lo);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  return static_cast<std::size_t>(next_double() * static_cast<double>(n)) % n;
}

Vector uniform_fill(Rng& rng, double lo, double hi, std::size_t n) {
  if (!(lo <= hi)) {
    throw std::invalid_argument("uniform_fill: lo (" + std::to_string(lo) + ") > hi (" +
                                std::to_string(hi) + ")");
  }
  Vector out(n);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

}  // namespace finer
