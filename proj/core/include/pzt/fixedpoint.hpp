#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pzt::fx {

using raw_t = std::int64_t;
__extension__ typedef __int128 wide_t;
__extension__ typedef unsigned __int128 uwide_t;

/// Two's-complement (or unsigned) fixed-point format. For signed formats the
/// integer part includes the sign bit: Q16.16 is 32 bits, range [-2^15, 2^15).
struct QFormat {
  int total_bits = 32;
  int frac_bits = 16;
  bool is_signed = true;

  constexpr int int_bits() const noexcept { return total_bits - frac_bits; }
  raw_t max_raw() const noexcept;
  raw_t min_raw() const noexcept;
  double ulp() const noexcept;
  double max_value() const noexcept;
  double min_value() const noexcept;

  /// Throws std::invalid_argument unless 0 < frac_bits < total_bits <= 64
  /// (<= 63 for unsigned).
  void validate() const;

  /// "q16.16" -> {32, 16, signed}; a leading "u" selects unsigned ("uq1.15").
  static QFormat parse(std::string_view text);
  std::string name() const;

  friend bool operator==(const QFormat&, const QFormat&) = default;
};

/// Counts saturation events; pass nullptr where saturation is benign.
struct Saturation {
  std::uint64_t count = 0;
  void hit() noexcept { ++count; }
  bool any() const noexcept { return count != 0; }
};

/// Clamps a wide intermediate to the format range.
raw_t saturate(wide_t v, QFormat q, Saturation* sat = nullptr) noexcept;

/// Arithmetic shift by `shift` bits with round-half-to-even (right shift for
/// shift > 0, exact left shift for shift < 0).
wide_t shift_round(wide_t v, int shift) noexcept;

/// Arithmetic shift right with truncation toward -infinity (left for shift < 0).
wide_t shift_floor(wide_t v, int shift) noexcept;

/// round-to-nearest-even(v * 2^frac), saturating. NaN maps to 0 and counts.
raw_t to_fixed(double v, QFormat q, Saturation* sat = nullptr) noexcept;
double to_double(raw_t raw, QFormat q) noexcept;

/// Moves a value between formats with rounding and saturation.
raw_t rescale(raw_t v, QFormat from, QFormat to, Saturation* sat = nullptr) noexcept;

/// Double-width product shifted back by frac_bits, rounded half-even, saturated.
raw_t fx_mul(raw_t a, raw_t b, QFormat q, Saturation* sat = nullptr) noexcept;

/// floor(sqrt(v)), bit by bit.
std::uint64_t isqrt(uwide_t v) noexcept;

/// Square root of a non-negative value: isqrt(a * 2^frac). Result r satisfies
/// r^2 <= a 2^f < (r + 1)^2. Throws std::invalid_argument for a < 0.
raw_t fx_sqrt(raw_t a, QFormat q);

/// sqrt(a^2 + b^2) with the same rounding as fx_sqrt.
raw_t fx_hypot(raw_t a, raw_t b, QFormat q, Saturation* sat = nullptr) noexcept;

inline constexpr int kExpLutSize = 256;
inline constexpr int kExpGuardBits = 16;

/// Samples of exp(-r) on the knots r = (i + 1) ln2 / size, i = 0 .. size-1;
/// the knot r = 0 is the constant 1.0 and never stored. The last entry is
/// exactly 0.5.
struct ExpLut {
  QFormat format{16, 15, true};
  std::vector<raw_t> entries;
};

ExpLut make_exp_lut(QFormat format = {16, 15, true}, int size = kExpLutSize);

/// exp(-u) for u >= 0 in format q (input and output). u = k ln2 + r with
/// r in [0, ln2); exp(-r) by linear interpolation between LUT knots with
/// kExpGuardBits extra bits, then an arithmetic right shift by k. Returns 0
/// once k >= frac_bits + 1. Throws std::invalid_argument for u < 0 or
/// q.frac_bits > 48.
raw_t fx_exp_neg(raw_t u, QFormat q, const ExpLut& lut);
/// Same with the default Q1.15 256-entry LUT.
raw_t fx_exp_neg(raw_t u, QFormat q);

/// Worst-case |fx_exp_neg - exp(-u)| from the LUT spacing, LUT rounding,
/// interpolation truncation and output truncation.
double exp_error_bound(QFormat q, const ExpLut& lut);

} // namespace pzt::fx
