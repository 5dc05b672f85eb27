#pragma once

#include "pzt/generator.hpp"
#include "pzt/modelsel.hpp"
#include "pzt/pzernike.hpp"
#include "pzt/trigger.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pzt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitGate = 4;

/// Bad flag values discovered after parsing (exit 2).
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Camera either from a geometry file or from rings/pitch.
struct CameraOptions {
  std::string geometry;
  std::size_t rings = 11;
  double pitch = 1.0;
};

struct CleaningOptions {
  double core = 10.0;
  double boundary = 5.0;
};

struct GenOptions {
  CameraOptions camera;
  std::string out;
  std::string geometry_out;
  std::size_t gammas = 1000;
  std::size_t hadrons = 1000;
  std::uint64_t seed = 42;
  std::uint64_t first_id = 0;
  double noise_sigma = 1.0;
};

struct ExtractOptions {
  CameraOptions camera;
  CleaningOptions cleaning;
  std::string events;
  std::string out;
  std::string basis_out;
  int n_max = kDefaultOrder;
};

struct HillasOptions {
  CameraOptions camera;
  CleaningOptions cleaning;
  std::string events;
  std::string out;
};

struct TrainOptions {
  std::string features;
  std::string out;
  double c = 28526.2;
  double gamma = 1.07;
  double tol = 1e-3;
  int max_passes = 50;
  std::uint64_t seed = 0;
  std::size_t cache_mb = 512;
};

struct GridOptions {
  std::string features;
  std::string out;
  std::string model_out;
  std::string c_range = "-5:17:2";
  std::string gamma_range = "-15:3:2";
  double fine_radius = 2.0;
  double fine_step = 0.25;
  int folds = 5;
  double fraction = 0.05;
  std::uint64_t seed = 1;
  double tol = 1e-3;
  int max_passes = 50;
  unsigned threads = 0;
};

struct PredictOptions {
  std::string model;
  std::string features;
  std::string out;
};

struct EvaluateOptions {
  std::string model;
  std::string features;
  std::string out;
  std::string counts; ///< "gamma_total,gamma_recognized,hadron_total,hadron_recognized"
};

struct FormatOverrides {
  bool wide = false;
  std::string basis, norm, sv, dual, bias, gamma, lut, pixel, acc, feature, kernel;
  int lut_size = fx::kExpLutSize;
};

struct ExportOptions {
  CameraOptions camera;
  FormatOverrides formats;
  std::string model;
  std::string out;
  std::string report;
};

struct RunOptions {
  CameraOptions camera;
  CleaningOptions cleaning;
  std::string trigger;
  std::string model;
  std::string events;
  std::string out;
  bool gate = false;
  double min_agreement = 0.99;
  double max_dev = 0.01;
  double dev_window = 8.0;
};

struct BenchOptions {
  CameraOptions camera;
  CleaningOptions cleaning;
  std::string trigger;
  std::string model;
  std::string events;
  int repeat = 3;
};

struct ReconstructOptions {
  CameraOptions camera;
  CleaningOptions cleaning;
  std::string events;
  std::string out;
  std::uint64_t event_id = 0;
  int n_max = kDefaultOrder;
};

int run_gen(const GenOptions& o);
int run_extract(const ExtractOptions& o);
int run_hillas(const HillasOptions& o);
int run_train(const TrainOptions& o);
int run_gridsearch(const GridOptions& o);
int run_predict(const PredictOptions& o);
int run_evaluate(const EvaluateOptions& o);
int run_export(const ExportOptions& o);
int run_fxp(const RunOptions& o);
int run_bench(const BenchOptions& o);
int run_reconstruct(const ReconstructOptions& o);

/// "lo:hi:step" -> AxisRange. Throws UsageError.
AxisRange parse_range(const std::string& text);

} // namespace pzt::cli
