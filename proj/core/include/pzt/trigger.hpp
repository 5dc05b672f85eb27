#pragma once

#include "pzt/camera.hpp"
#include "pzt/fixedpoint.hpp"
#include "pzt/pzernike.hpp"
#include "pzt/svm.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pzt::fx {

/// Storage formats of the exported tables and the pipeline intermediates.
struct TriggerFormats {
  QFormat basis{32, 30};
  QFormat norm_mean{32, 16};
  QFormat norm_invstd{32, 16};
  QFormat support_vectors{32, 16};
  QFormat dual_coeffs{32, 8};
  QFormat bias{32, 8};
  QFormat gamma{32, 24};
  QFormat exp_lut{32, 30};
  QFormat pixel{32, 16};
  QFormat accumulator{64, 32};
  QFormat feature{32, 16};
  QFormat kernel{32, 24}; ///< exp argument and result

  static TriggerFormats defaults() { return {}; }
  /// Every table and intermediate in 64-bit Q24.40.
  static TriggerFormats wide();

  /// Each format valid, storage width one of 8/16/32/64 bits, signed.
  void validate() const;
};

/// Table names in serialization order; the last four are pipeline formats
/// that carry no payload.
inline constexpr std::array<const char*, 12> kTableNames{
    "basis", "norm_mean", "norm_invstd", "support_vectors", "dual_coeffs", "bias",
    "gamma", "exp_lut",   "pixel",       "accumulator",     "feature",     "kernel"};

/// Quantized tables for the emulated trigger.
struct TriggerImage {
  TriggerFormats formats;
  int n_max = 0;
  std::size_t n_pixels = 0;
  std::size_t n_features = 0;
  std::size_t n_sv = 0;
  std::vector<raw_t> basis; ///< pixel-major, (re, im) interleaved
  std::vector<raw_t> norm_mean;
  std::vector<raw_t> norm_invstd;
  std::vector<raw_t> support_vectors; ///< n_sv x n_features
  std::vector<raw_t> dual_coeffs;
  raw_t bias = 0;
  raw_t gamma = 0;
  ExpLut exp_lut;

  /// Throws std::invalid_argument if table sizes disagree with the counts.
  void check_consistency() const;
};

/// Raised when a value range does not fit the requested format.
class ExportRangeError : public std::runtime_error {
public:
  ExportRangeError(std::string table, const std::string& detail)
      : std::runtime_error("export: table '" + table + "' " + detail), table_(std::move(table)) {}
  const std::string& table() const noexcept { return table_; }

private:
  std::string table_;
};

struct ExportReport {
  std::map<std::string, std::uint64_t> saturations;   ///< values clamped by at most one ulp
  std::map<std::string, double> max_quantization_error; ///< max |dequantized - original|
};

/// Quantizes model and basis. A table whose values leave its format by more
/// than one ulp raises ExportRangeError; dual coefficients and bias need one
/// extra integer bit of headroom (2 max|v| must fit). Throws
/// std::invalid_argument for a non-converged model or mismatched dimensions.
TriggerImage export_trigger(const SvmModel& model, const BasisTable& table, const TriggerFormats& formats,
                            ExportReport* report = nullptr);

/// Quantizes a (cleaned) float image to the trigger's pixel format.
std::vector<raw_t> quantize_image(std::span<const double> pixel_phe, QFormat pixel, Saturation* sat = nullptr);

struct PipelineResult {
  int label = 1;
  raw_t decision = 0; ///< accumulator format
  double decision_value = 0.0;
  bool saturated = false; ///< sticky: any stage clamped
};

/// Straight-line fixed-point evaluation: moments, magnitudes, normalization,
/// kernel sum, sign. Throws std::invalid_argument on a pixel count mismatch.
PipelineResult fx_pipeline(const TriggerImage& trigger, std::span<const raw_t> pixels);

/// Intermediate fixed-point values, for tests and diagnostics.
struct PipelineTrace {
  std::vector<raw_t> moment_re, moment_im; ///< accumulator format
  std::vector<raw_t> features;             ///< feature format
  std::vector<raw_t> normalized;           ///< support-vector format
  std::vector<raw_t> kernel_args;          ///< kernel format
  std::vector<raw_t> kernel_values;        ///< kernel format
  PipelineResult result;
};
PipelineTrace fx_pipeline_trace(const TriggerImage& trigger, std::span<const raw_t> pixels);

/// Per-event analytic bound on |fx decision - float decision|, summed over
/// the quantization and rounding of every stage, propagated through the
/// float pipeline's own intermediates.
double decision_error_budget(const TriggerImage& trigger, const SvmModel& model, const BasisTable& table,
                             std::span<const double> cleaned_pixels);

struct AgreementRow {
  std::uint64_t event_id = 0;
  double float_decision = 0.0;
  double fx_decision = 0.0;
  double abs_err = 0.0;
  int label_float = 1;
  int label_fx = 1;
  bool saturated = false;
  double budget = 0.0;
};

struct AgreementReport {
  std::vector<AgreementRow> rows;
  std::size_t mismatches = 0;
  std::size_t saturated_events = 0;
  double max_abs_dev = 0.0;
  double mean_abs_dev = 0.0;

  double agreement() const noexcept {
    return rows.empty() ? 1.0 : 1.0 - static_cast<double>(mismatches) / static_cast<double>(rows.size());
  }
};

/// Runs the float and fixed pipelines on already cleaned events.
AgreementReport agreement_report(const SvmModel& model, const BasisTable& table, const TriggerImage& trigger,
                                 std::span<const CherenkovImage> cleaned_events);

} // namespace pzt::fx
