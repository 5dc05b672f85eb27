#include "pzt/pzernike.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pzt {

namespace {

__extension__ typedef unsigned __int128 u128;

u128 binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  u128 r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<u128>(n - k + i) / static_cast<u128>(i);
  return r;
}

void check_order(int n, int m) {
  if (n < 0 || n > kMaxOrder || m < 0 || m > n) {
    throw std::invalid_argument("pseudo-Zernike order requires 0 <= m <= n <= " + std::to_string(kMaxOrder) +
                                ", got n=" + std::to_string(n) + " m=" + std::to_string(m));
  }
}

// Horner in rho over powers n..m, then the rho^m factor.
double eval_radial(const std::vector<double>& coeffs, int m, double rho) {
  double acc = 0.0;
  for (const double c : coeffs) acc = acc * rho + c;
  double rho_m = 1.0;
  for (int i = 0; i < m; ++i) rho_m *= rho;
  return acc * rho_m;
}

struct RadialSet {
  int n_max;
  std::vector<OrderRepetition> pairs;
  std::vector<std::vector<double>> coeffs;

  explicit RadialSet(int n) : n_max(n), pairs(canonical_pairs(n)) {
    coeffs.reserve(pairs.size());
    for (const auto& p : pairs) coeffs.push_back(radial_coefficients(p.n, p.m));
  }
};

} // namespace

std::vector<OrderRepetition> canonical_pairs(int n_max) {
  if (n_max < 0 || n_max > kMaxOrder) throw std::invalid_argument("n_max out of range");
  std::vector<OrderRepetition> out;
  out.reserve(feature_count(n_max));
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= n; ++m) out.push_back({n, m});
  return out;
}

std::vector<double> radial_coefficients(int n, int m) {
  check_order(n, m);
  std::vector<double> c;
  c.reserve(static_cast<std::size_t>(n - m + 1));
  for (int s = 0; s <= n - m; ++s) {
    // (2n+1-s)! / (s! (n-m-s)! (n+m+1-s)!) is a multinomial coefficient.
    const u128 mag = binomial(2 * n + 1 - s, s) * binomial(2 * n + 1 - 2 * s, n - m - s);
    const double v = static_cast<double>(mag);
    c.push_back((s % 2 == 0) ? v : -v);
  }
  return c;
}

double radial_polynomial(int n, int m, double rho) {
  check_order(n, m);
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("radial_polynomial: rho must lie in [0, 1]");
  return eval_radial(radial_coefficients(n, m), m, rho);
}

std::complex<double> basis_value(int n, int m, double rho, double theta) {
  const int am = std::abs(m);
  const double r = radial_polynomial(n, am, rho);
  return {r * std::cos(m * theta), r * std::sin(m * theta)};
}

BasisTable::BasisTable(int n_max, std::size_t n_pixels, std::vector<std::complex<double>> values)
    : n_max_(n_max), n_pixels_(n_pixels), values_(std::move(values)) {
  if (n_max < 0 || n_max > kMaxOrder) throw std::invalid_argument("BasisTable: n_max out of range");
  if (values_.size() != n_pixels_ * feature_count(n_max_)) {
    throw std::invalid_argument("BasisTable: value count does not match pixels x moments");
  }
}

BasisTable build_basis_table(const DiskMapping& mapping, int n_max) {
  const RadialSet radial(n_max);
  const std::size_t nk = radial.pairs.size();
  const std::size_t np = mapping.pixel_count();
  std::vector<std::complex<double>> values(np * nk);
  for (std::size_t p = 0; p < np; ++p) {
    const double rho = mapping.rho[p];
    const double theta = mapping.theta[p];
    for (std::size_t k = 0; k < nk; ++k) {
      const auto [n, m] = radial.pairs[k];
      const double scale = (n + 1) / std::numbers::pi * eval_radial(radial.coeffs[k], m, rho) * mapping.weight[p];
      values[p * nk + k] = {scale * std::cos(m * theta), -scale * std::sin(m * theta)};
    }
  }
  return BasisTable(n_max, np, std::move(values));
}

MomentSet moments(std::span<const double> image, const BasisTable& table) {
  if (image.size() != table.pixel_count()) {
    throw std::invalid_argument("moments: image has " + std::to_string(image.size()) + " pixels, table has " +
                                std::to_string(table.pixel_count()));
  }
  MomentSet out;
  out.n_max = table.n_max();
  out.values.assign(table.moment_count(), {0.0, 0.0});
  for (std::size_t p = 0; p < image.size(); ++p) {
    const double v = image[p];
    if (v == 0.0) continue;
    const auto row = table.pixel_row(p);
    for (std::size_t k = 0; k < row.size(); ++k) out.values[k] += v * row[k];
  }
  return out;
}

FeatureVector feature_vector(const MomentSet& moments) {
  FeatureVector f;
  f.reserve(moments.values.size());
  for (const auto& a : moments.values) f.push_back(std::hypot(a.real(), a.imag()));
  return f;
}

std::vector<double> reconstruct(const MomentSet& moments, const DiskMapping& mapping) {
  const RadialSet radial(moments.n_max);
  if (moments.values.size() != radial.pairs.size()) throw std::invalid_argument("reconstruct: inconsistent n_max");
  std::vector<double> out(mapping.pixel_count(), 0.0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < radial.pairs.size(); ++k) {
      const auto [n, m] = radial.pairs[k];
      const double r = eval_radial(radial.coeffs[k], m, mapping.rho[p]);
      const auto& a = moments.values[k];
      const double term = r * (a.real() * std::cos(m * mapping.theta[p]) - a.imag() * std::sin(m * mapping.theta[p]));
      acc += (m == 0) ? term : 2.0 * term;
    }
    out[p] = acc;
  }
  return out;
}

double orthogonality_check(int n_max, int grid) {
  if (grid < 256) throw std::invalid_argument("orthogonality_check: grid must be >= 256");
  const RadialSet radial(n_max);

  // Signed basis: index pairs into radial.pairs with a sign on m.
  struct Member {
    int n, m;
    std::size_t radial_k;
  };
  std::vector<Member> members;
  for (std::size_t k = 0; k < radial.pairs.size(); ++k) {
    const auto [n, m] = radial.pairs[k];
    members.push_back({n, m, k});
    if (m > 0) members.push_back({n, -m, k});
  }
  const std::size_t nb = members.size();

  std::vector<std::complex<double>> gram(nb * nb, {0.0, 0.0});
  std::vector<std::complex<double>> v(nb);
  std::vector<double> r(radial.pairs.size());
  std::vector<std::complex<double>> phase(static_cast<std::size_t>(n_max) + 1);

  const double h = 2.0 / grid;
  for (int iy = 0; iy < grid; ++iy) {
    const double y = -1.0 + (iy + 0.5) * h;
    for (int ix = 0; ix < grid; ++ix) {
      const double x = -1.0 + (ix + 0.5) * h;
      const double rho2 = x * x + y * y;
      if (rho2 > 1.0) continue;
      const double rho = std::sqrt(rho2);
      const std::complex<double> unit = rho > 0.0 ? std::complex<double>(x / rho, y / rho) : 1.0;
      phase[0] = 1.0;
      for (int m = 1; m <= n_max; ++m) phase[m] = phase[m - 1] * unit;
      for (std::size_t k = 0; k < r.size(); ++k) r[k] = eval_radial(radial.coeffs[k], radial.pairs[k].m, rho);
      for (std::size_t i = 0; i < nb; ++i) {
        const auto& mb = members[i];
        const auto e = mb.m >= 0 ? phase[mb.m] : std::conj(phase[-mb.m]);
        v[i] = r[mb.radial_k] * e;
      }
      for (std::size_t i = 0; i < nb; ++i) {
        const auto vi = v[i];
        auto* row = gram.data() + i * nb;
        for (std::size_t j = i; j < nb; ++j) row[j] += vi * std::conj(v[j]);
      }
    }
  }

  double worst = 0.0;
  const double area = h * h;
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = i; j < nb; ++j) {
      const double expected = (i == j) ? std::numbers::pi / (members[i].n + 1) : 0.0;
      worst = std::max(worst, std::abs(gram[i * nb + j] * area - expected));
    }
  }
  return worst;
}

FeatureVector extract_features(const CherenkovImage& image, const CameraGeometry& geometry, const BasisTable& table,
                               const CleaningParams& cleaning) {
  const auto cleaned = clean_image(image, geometry, cleaning.core, cleaning.boundary);
  return feature_vector(moments(cleaned.pixel_phe, table));
}

} // namespace pzt
