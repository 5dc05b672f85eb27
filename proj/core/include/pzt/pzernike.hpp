#pragma once

#include "pzt/camera.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pzt {

/// Largest order the radial coefficient tables support.
inline constexpr int kMaxOrder = 20;
inline constexpr int kDefaultOrder = 7;

/// Number of (n, m >= 0) pairs up to n_max: (n_max + 1)(n_max + 2) / 2.
constexpr std::size_t feature_count(int n_max) noexcept {
  return static_cast<std::size_t>(n_max + 1) * static_cast<std::size_t>(n_max + 2) / 2;
}

/// Number of signed-m basis functions up to n_max: (n_max + 1)^2.
constexpr std::size_t signed_basis_count(int n_max) noexcept {
  return static_cast<std::size_t>(n_max + 1) * static_cast<std::size_t>(n_max + 1);
}

/// Canonical position of (n, m >= 0): n ascending, m ascending within n.
constexpr std::size_t moment_index(int n, int m) noexcept {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2 + static_cast<std::size_t>(m);
}

struct OrderRepetition {
  int n = 0;
  int m = 0;
};

/// All (n, m >= 0) pairs in canonical order.
std::vector<OrderRepetition> canonical_pairs(int n_max);

/// Pseudo-Zernike radial polynomial
///   R_nm(rho) = sum_{s=0}^{n-m} (-1)^s (2n+1-s)! / (s! (n-m-s)! (n+m+1-s)!) rho^(n-s)
/// with exact integer coefficients, evaluated by Horner's rule.
/// Throws std::invalid_argument unless 0 <= m <= n <= kMaxOrder and 0 <= rho <= 1.
double radial_polynomial(int n, int m, double rho);

/// Coefficient of rho^(n-s) in R_nm, for s = 0 .. n-m. Exact for n <= 7.
std::vector<double> radial_coefficients(int n, int m);

/// V_nm(rho, theta) = R_n|m|(rho) exp(i m theta), m may be negative.
std::complex<double> basis_value(int n, int m, double rho, double theta);

/// Precomputed (n+1)/pi * conj(V_nm(rho_p, theta_p)) * dA_p per pixel and
/// (n, m >= 0) pair; pixel-major, canonical (n, m) order within a pixel.
class BasisTable {
public:
  BasisTable() = default;
  BasisTable(int n_max, std::size_t n_pixels, std::vector<std::complex<double>> values);

  int n_max() const noexcept { return n_max_; }
  std::size_t pixel_count() const noexcept { return n_pixels_; }
  std::size_t moment_count() const noexcept { return feature_count(n_max_); }

  const std::complex<double>& entry(std::size_t pixel, std::size_t k) const noexcept {
    return values_[pixel * moment_count() + k];
  }
  std::span<const std::complex<double>> pixel_row(std::size_t pixel) const noexcept {
    return {values_.data() + pixel * moment_count(), moment_count()};
  }
  std::span<const std::complex<double>> values() const noexcept { return values_; }

private:
  int n_max_ = 0;
  std::size_t n_pixels_ = 0;
  std::vector<std::complex<double>> values_;
};

BasisTable build_basis_table(const DiskMapping& mapping, int n_max = kDefaultOrder);

/// Complex moments A_nm, m >= 0, in canonical order.
struct MomentSet {
  int n_max = 0;
  std::vector<std::complex<double>> values;
};

using FeatureVector = std::vector<double>;

/// A_nm = sum_p I_p * table(p, n, m). Throws std::invalid_argument on a
/// pixel count mismatch.
MomentSet moments(std::span<const double> image, const BasisTable& table);

/// |A_nm| in canonical order.
FeatureVector feature_vector(const MomentSet& moments);

/// Per-pixel reconstruction sum_{n, m} Re[A_nm V_nm], the m < 0 half taken
/// from A_{n,-m} = conj(A_nm).
std::vector<double> reconstruct(const MomentSet& moments, const DiskMapping& mapping);

/// Midpoint-rule Gram matrix of the signed basis on a grid x grid Cartesian
/// lattice over [-1, 1]^2 restricted to the unit disk; returns the largest
/// |<V_nm, V_n'm'> - pi/(n+1) delta|. Throws std::invalid_argument if grid < 256.
double orthogonality_check(int n_max, int grid);

/// Image cleaning thresholds applied before moment extraction.
struct CleaningParams {
  double core = 10.0;
  double boundary = 5.0;
};

/// clean -> moments -> magnitudes for one event.
FeatureVector extract_features(const CherenkovImage& image, const CameraGeometry& geometry, const BasisTable& table,
                               const CleaningParams& cleaning);

} // namespace pzt
