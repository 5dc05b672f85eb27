#pragma once

#include "pzt/dataset.hpp"
#include "pzt/svm.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pzt {

/// Population mean/std per feature. Zero-variance features get std = 1 and a
/// degenerate flag. Throws std::invalid_argument for fewer than 2 rows.
Normalizer zscore_fit(const LabeledDataset& training);

/// (x - mean) / std. Throws std::invalid_argument on a dimension mismatch.
std::vector<double> zscore_apply(const Normalizer& norm, std::span<const double> x);
/// mean + z * std.
std::vector<double> zscore_inverse(const Normalizer& norm, std::span<const double> z);
LabeledDataset zscore_apply(const Normalizer& norm, const LabeledDataset& data);

/// Per class: seeded shuffle, then round-robin assignment to m folds. Each
/// fold's indices are returned ascending. Throws std::invalid_argument if
/// m < 2 or a class has fewer than m members.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, int m, std::uint64_t seed);

/// Seeded stratified subsample keeping round(fraction * class size) rows per
/// class, but at least min_per_class (capped at the class size). Ascending.
std::vector<std::size_t> stratified_subsample(std::span<const int> labels, double fraction, std::size_t min_per_class,
                                              std::uint64_t seed);

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;

  /// lo, lo + step, ... up to hi (inclusive within 1e-9 step).
  std::vector<double> values() const;
};

struct GridSpec {
  AxisRange log2_c{-5.0, 17.0, 2.0};
  AxisRange log2_gamma{-15.0, 3.0, 2.0};
  double fine_radius = 2.0; ///< 0 disables the refinement pass
  double fine_step = 0.25;
  int folds = 5;
  double fraction = 0.05;
  std::uint64_t seed = 1;
  double tol = 1e-3;
  int max_passes = 50;
  unsigned threads = 0; ///< 0: hardware concurrency

  /// Throws std::invalid_argument on non-positive steps, empty ranges,
  /// fraction outside (0, 1] or folds < 2.
  void validate() const;
};

struct GridCell {
  double log2_c = 0.0;
  double log2_gamma = 0.0;
  double cv_accuracy = 0.0;
  bool failed = false;
};

struct GridResult {
  GridCell best;
  std::vector<GridCell> cells; ///< ascending by (log2_c, log2_gamma), unique
  std::size_t subsample_size = 0;

  double best_c() const;
  double best_gamma() const;
};

/// Mean validation accuracy over the folds (unweighted).
double cross_validate(const LabeledDataset& data, const std::vector<std::vector<std::size_t>>& folds,
                      const SmoOptions& options);

/// Coarse pass over the spec grid, then a fine pass of +-fine_radius around
/// the coarse argmax. Ties go to smaller C, then smaller gamma. Cells run in
/// parallel but are reduced in grid order, so results match a serial run.
/// `data` should already be normalized.
GridResult grid_search(const LabeledDataset& data, const GridSpec& spec);

struct ClassCounts {
  std::size_t total = 0;
  std::size_t recognized = 0;
  double ratio() const noexcept { return total == 0 ? 0.0 : static_cast<double>(recognized) / static_cast<double>(total); }
};

struct ConfusionMetrics {
  ClassCounts gamma;
  ClassCounts hadron;

  static ConfusionMetrics from_counts(std::size_t gamma_total, std::size_t gamma_recognized, std::size_t hadron_total,
                                      std::size_t hadron_recognized);

  double accuracy() const noexcept;
};

/// Counts recognized events per class. `test` holds raw (unnormalized)
/// features; the model's normalizer is applied. Throws std::invalid_argument
/// on an empty set.
ConfusionMetrics evaluate(const SvmModel& model, const LabeledDataset& test);

/// Total | Recognized | Ratio table with ratios as percentages to one decimal.
std::string format_metrics_table(const ConfusionMetrics& metrics);

/// Percentage string with one decimal, e.g. 0.77530 -> "77.5%".
std::string format_percent(double ratio);

/// Fits a normalizer on `raw`, trains on the normalized rows and stores the
/// normalizer in the model.
SvmModel fit_model(const LabeledDataset& raw, const SmoOptions& options);

} // namespace pzt
