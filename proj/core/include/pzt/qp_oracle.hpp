#pragma once

#include "pzt/dataset.hpp"

#include <cstddef>
#include <vector>

namespace pzt {

/// Reference solver for the SVM dual on small problems (n <= 12). It shares
/// nothing with the SMO trainer beyond the kernel formula.
struct QpResult {
  std::vector<double> alpha;
  double objective = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0; ///< last |delta alpha|_inf, relative to max(1, C)
  bool converged = false;
  bool polished = false; ///< final active-set linear solve was accepted
};

/// Projected gradient ascent (Nesterov momentum with restart, step halving
/// on failed ascent) to |delta alpha|_inf < 1e-10 max(1, C) or 10^6
/// iterations, followed by an exact KKT solve on the identified free set.
/// Throws std::invalid_argument for n > 12 or a single class.
QpResult brute_force_qp(const LabeledDataset& data, double C, double gamma);

/// Dense RBF Gram matrix, row-major n x n.
std::vector<double> gram_matrix(const LabeledDataset& data, double gamma);

/// Eigenvalues of a symmetric n x n matrix by cyclic Jacobi rotations,
/// ascending.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n);

/// Euclidean projection onto {0 <= a_i <= C, sum a_i y_i = 0}.
std::vector<double> project_feasible(const std::vector<double>& v, const std::vector<int>& y, double C);

} // namespace pzt
