#pragma once

#include "pzt/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pzt {

/// exp(-gamma * |x - z|^2). Throws std::invalid_argument on a length mismatch
/// or gamma <= 0.
double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

struct SmoOptions {
  double C = 1.0;
  double gamma = 1.0;
  double tol = 1e-3;
  int max_passes = 50;
  std::uint64_t seed = 0;
  /// Kernel row cache budget; rows beyond it are recomputed (LRU eviction).
  std::size_t cache_bytes = std::size_t{512} << 20;
};

/// Solution of the dual problem
///   max sum(a) - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j),  0 <= a_i <= C,  sum a_i y_i = 0.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0; ///< dual objective (maximization form)
  double gap = 0.0;       ///< max-violating-pair gap at termination
  std::size_t iterations = 0;
  bool converged = false;
};

/// Sequential minimal optimization with second-order working-set selection.
/// Stops when the max-violating-pair gap drops below tol. A pass is n pair
/// updates; after max_passes passes without objective progress, or after
/// max(10^7, 100 n) updates, the solution is returned with converged = false.
/// Throws std::invalid_argument for < 2 rows, a single class, C <= 0,
/// gamma <= 0, or tol outside (0, 1e-2].
DualSolution solve_dual_smo(const LabeledDataset& data, const SmoOptions& options);

struct SvmModel {
  double gamma = 1.0;
  double C = 1.0;
  double tol = 1e-3;
  double bias = 0.0;
  Normalizer normalizer;
  std::size_t dim = 0;
  std::vector<double> support_vectors; ///< row-major, sv_count() x dim, normalized space
  std::vector<double> dual_coeffs;     ///< alpha_i * y_i
  bool converged = true;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;

  std::size_t sv_count() const noexcept { return dual_coeffs.size(); }
  std::span<const double> support_vector(std::size_t i) const noexcept {
    return {support_vectors.data() + i * dim, dim};
  }
};

/// Trains on `data` as given and attaches an identity normalizer. Only rows
/// with alpha > 0 are kept.
SvmModel train_smo(const LabeledDataset& data, const SmoOptions& options);

SvmModel model_from_dual(const LabeledDataset& data, const DualSolution& solution, const SmoOptions& options);

/// sum_i dual_coeffs[i] k(sv_i, x) + b on an already normalized x.
double decision_value(const SvmModel& model, std::span<const double> x);

/// Applies model.normalizer first.
double decision_value_raw(const SvmModel& model, std::span<const double> x);

/// +1 for f >= 0 (gamma wins ties), -1 otherwise.
constexpr int sign_label(double f) noexcept { return f >= 0.0 ? 1 : -1; }

int predict(const SvmModel& model, std::span<const double> x);
int predict_raw(const SvmModel& model, std::span<const double> x);

/// Dual objective of an arbitrary alpha.
double dual_objective(const LabeledDataset& data, std::span<const double> alpha, double gamma);

/// Largest violation of the margin conditions over all rows, in units of
/// y f(x): alpha = 0 needs y f >= 1, alpha = C needs y f <= 1, free rows need
/// y f = 1.
double kkt_violation(const LabeledDataset& data, std::span<const double> alpha, double bias, double C, double gamma);

/// Bias from a dual solution: mean of y_i - g_i over free rows, else the
/// midpoint of the interval allowed by bounded rows.
double compute_bias(const LabeledDataset& data, std::span<const double> alpha, double C, double gamma);

} // namespace pzt
