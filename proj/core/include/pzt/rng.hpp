#pragma once

#include <cstdint>

namespace pzt {

/// SplitMix64 stream. The whole generator is the three lines in next():
///
///   state += 0x9E3779B97F4A7C15
///   z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// Uniform doubles take the top 53 bits. Normals use Box-Muller (cosine
/// branch only, one normal per two uniforms) so that a reimplementation in
/// any language reproduces the same stream given the same libm.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;

  /// Uniform in [0, 1).
  double uniform() noexcept;
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Integer uniform in [lo, hi] (inclusive), by multiply-shift on 64 bits.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  /// Standard normal.
  double normal() noexcept;
  /// Log-uniform in [lo, hi] for lo, hi > 0.
  double log_uniform(double lo, double hi) noexcept;

  std::uint64_t state() const noexcept { return state_; }

private:
  std::uint64_t state_;
};

/// Mixes (seed, index) into an independent per-item seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

} // namespace pzt
