#include "pzt/fixedpoint.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pzt::fx {

raw_t QFormat::max_raw() const noexcept {
  const int bits = is_signed ? total_bits - 1 : total_bits;
  return bits >= 63 ? std::numeric_limits<raw_t>::max() : (raw_t{1} << bits) - 1;
}

raw_t QFormat::min_raw() const noexcept {
  if (!is_signed) return 0;
  return total_bits >= 64 ? std::numeric_limits<raw_t>::min() : -(raw_t{1} << (total_bits - 1));
}

double QFormat::ulp() const noexcept { return std::ldexp(1.0, -frac_bits); }
double QFormat::max_value() const noexcept { return std::ldexp(static_cast<double>(max_raw()), -frac_bits); }
double QFormat::min_value() const noexcept { return std::ldexp(static_cast<double>(min_raw()), -frac_bits); }

void QFormat::validate() const {
  const int limit = is_signed ? 64 : 63;
  if (!(frac_bits > 0 && frac_bits < total_bits && total_bits <= limit)) {
    throw std::invalid_argument("invalid fixed-point format " + name());
  }
}

QFormat QFormat::parse(std::string_view text) {
  QFormat q;
  std::string_view s = text;
  if (!s.empty() && (s.front() == 'u' || s.front() == 'U')) {
    q.is_signed = false;
    s.remove_prefix(1);
  }
  if (s.empty() || (s.front() != 'q' && s.front() != 'Q')) {
    throw std::invalid_argument("fixed-point format must look like q16.16, got '" + std::string(text) + "'");
  }
  s.remove_prefix(1);
  const auto dot = s.find('.');
  if (dot == std::string_view::npos) throw std::invalid_argument("fixed-point format missing '.': " + std::string(text));
  int ib = 0, fb = 0;
  const auto r1 = std::from_chars(s.data(), s.data() + dot, ib);
  const auto r2 = std::from_chars(s.data() + dot + 1, s.data() + s.size(), fb);
  if (r1.ec != std::errc{} || r1.ptr != s.data() + dot || r2.ec != std::errc{} || r2.ptr != s.data() + s.size()) {
    throw std::invalid_argument("cannot parse fixed-point format '" + std::string(text) + "'");
  }
  q.total_bits = ib + fb;
  q.frac_bits = fb;
  q.validate();
  return q;
}

std::string QFormat::name() const {
  return std::string(is_signed ? "q" : "uq") + std::to_string(total_bits - frac_bits) + "." + std::to_string(frac_bits);
}

raw_t saturate(wide_t v, QFormat q, Saturation* sat) noexcept {
  if (v > q.max_raw()) {
    if (sat) sat->hit();
    return q.max_raw();
  }
  if (v < q.min_raw()) {
    if (sat) sat->hit();
    return q.min_raw();
  }
  return static_cast<raw_t>(v);
}

wide_t shift_round(wide_t v, int shift) noexcept {
  if (shift <= 0) return v * (wide_t{1} << -shift);
  const wide_t q = v >> shift;
  const wide_t rem = v - (q << shift);
  const wide_t half = wide_t{1} << (shift - 1);
  if (rem > half || (rem == half && (q & 1) != 0)) return q + 1;
  return q;
}

wide_t shift_floor(wide_t v, int shift) noexcept {
  if (shift <= 0) return v * (wide_t{1} << -shift);
  return v >> shift;
}

raw_t to_fixed(double v, QFormat q, Saturation* sat) noexcept {
  if (std::isnan(v)) {
    if (sat) sat->hit();
    return 0;
  }
  const double scaled = std::nearbyint(std::ldexp(v, q.frac_bits));
  const int bits = q.is_signed ? q.total_bits - 1 : q.total_bits;
  if (scaled >= std::ldexp(1.0, bits)) {
    if (sat) sat->hit();
    return q.max_raw();
  }
  if (scaled < static_cast<double>(q.min_raw())) {
    if (sat) sat->hit();
    return q.min_raw();
  }
  return static_cast<raw_t>(scaled);
}

double to_double(raw_t raw, QFormat q) noexcept { return std::ldexp(static_cast<double>(raw), -q.frac_bits); }

raw_t rescale(raw_t v, QFormat from, QFormat to, Saturation* sat) noexcept {
  return saturate(shift_round(v, from.frac_bits - to.frac_bits), to, sat);
}

raw_t fx_mul(raw_t a, raw_t b, QFormat q, Saturation* sat) noexcept {
  return saturate(shift_round(static_cast<wide_t>(a) * b, q.frac_bits), q, sat);
}

std::uint64_t isqrt(uwide_t v) noexcept {
  uwide_t rem = v;
  uwide_t res = 0;
  uwide_t bit = uwide_t{1} << 126;
  while (bit > rem) bit >>= 2;
  while (bit != 0) {
    if (rem >= res + bit) {
      rem -= res + bit;
      res = (res >> 1) + bit;
    } else {
      res >>= 1;
    }
    bit >>= 2;
  }
  return static_cast<std::uint64_t>(res);
}

raw_t fx_sqrt(raw_t a, QFormat q) {
  if (a < 0) throw std::invalid_argument("fx_sqrt: negative input");
  const auto r = isqrt(static_cast<uwide_t>(a) << q.frac_bits);
  return saturate(static_cast<wide_t>(r), q);
}

raw_t fx_hypot(raw_t a, raw_t b, QFormat q, Saturation* sat) noexcept {
  const auto ua = static_cast<uwide_t>(a < 0 ? -static_cast<wide_t>(a) : static_cast<wide_t>(a));
  const auto ub = static_cast<uwide_t>(b < 0 ? -static_cast<wide_t>(b) : static_cast<wide_t>(b));
  return saturate(static_cast<wide_t>(isqrt(ua * ua + ub * ub)), q, sat);
}

ExpLut make_exp_lut(QFormat format, int size) {
  format.validate();
  if (size < 2 || (size & (size - 1)) != 0) throw std::invalid_argument("exp LUT size must be a power of two >= 2");
  ExpLut lut;
  lut.format = format;
  lut.entries.reserve(static_cast<std::size_t>(size));
  const double h = std::numbers::ln2 / size;
  for (int i = 0; i < size; ++i) lut.entries.push_back(to_fixed(std::exp(-(i + 1) * h), format));
  lut.entries.back() = raw_t{1} << (format.frac_bits - 1);
  return lut;
}

namespace {

wide_t floor_div(wide_t n, wide_t d) noexcept {
  wide_t q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

} // namespace

raw_t fx_exp_neg(raw_t u, QFormat q, const ExpLut& lut) {
  if (u < 0) throw std::invalid_argument("fx_exp_neg: negative argument");
  if (q.frac_bits > 48) throw std::invalid_argument("fx_exp_neg: at most 48 fractional bits");
  const int lut_frac = lut.format.frac_bits;
  const auto size = static_cast<wide_t>(lut.entries.size());

  const auto ln2 = static_cast<wide_t>(std::nearbyint(std::ldexp(std::numbers::ln2, q.frac_bits)));
  const wide_t k = u / ln2;
  if (k >= q.frac_bits + 1) return 0;
  const wide_t r = u - k * ln2;

  const wide_t num = r * size;
  const wide_t idx = num / ln2;
  const wide_t rem = num - idx * ln2;
  const wide_t left = idx == 0 ? (wide_t{1} << lut_frac) : lut.entries[static_cast<std::size_t>(idx - 1)];
  const wide_t right = lut.entries[static_cast<std::size_t>(idx)];

  const wide_t v = (left << kExpGuardBits) + floor_div(((right - left) * rem) << kExpGuardBits, ln2);
  const int shift = lut_frac + kExpGuardBits - q.frac_bits + static_cast<int>(k);
  return saturate(shift_floor(v, shift), q);
}

raw_t fx_exp_neg(raw_t u, QFormat q) {
  static const ExpLut lut = make_exp_lut();
  return fx_exp_neg(u, q, lut);
}

double exp_error_bound(QFormat q, const ExpLut& lut) {
  const double h = std::numbers::ln2 / static_cast<double>(lut.entries.size());
  const double lut_ulp = lut.format.ulp();
  double bound = h * h / 8.0 + lut_ulp / 2.0 + std::ldexp(lut_ulp, -kExpGuardBits) + 1.25 * q.ulp();
  if (q.max_value() < 1.0) bound += q.ulp();
  return bound;
}

} // namespace pzt::fx
