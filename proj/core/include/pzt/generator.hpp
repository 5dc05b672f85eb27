#pragma once

#include "pzt/camera.hpp"

#include <cstdint>
#include <vector>

namespace pzt {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// All lengths below are in units of the camera pixel pitch.

struct GammaShape {
  Interval size{100.0, 2000.0}; ///< phe, log-uniform
  Interval length{1.5, 3.5};
  Interval width{0.6, 1.0};
  Interval dist{1.5, 7.0};      ///< distance of the blob center from the camera center
  double alpha_sigma_deg = 3.0; ///< spread of the major axis around the radial direction
};

struct HadronShape {
  int min_blobs = 1;
  int max_blobs = 4;
  Interval size{100.0, 2000.0}; ///< total phe over all blobs, log-uniform
  Interval length{1.2, 4.0};
  Interval width{1.2, 3.0};
  Interval dist{0.0, 8.0};
};

struct NoiseParams {
  double pedestal_mean = 0.0;
  double pedestal_sigma = 1.0; ///< 0 disables noise
};

struct GeneratorParams {
  GammaShape gamma;
  HadronShape hadron;
  NoiseParams noise;

  /// Throws std::invalid_argument on empty/negative ranges or blob counts < 1.
  void validate() const;
};

/// Renders one synthetic event. Deterministic in (label, params, seed, geometry).
///
/// Draw order from SplitMix64(seed): gamma -> size, length, width, dist,
/// azimuth, axis jitter; hadron -> blob count, total size, then per blob
/// weight, length, width, dist, azimuth, orientation; finally one normal per
/// pixel in pixel order when noise is enabled.
CherenkovImage generate_event(Label label, const GeneratorParams& params, std::uint64_t seed,
                              const CameraGeometry& geometry, std::uint64_t event_id = 0);

/// `n_gamma` gammas followed by `n_hadron` hadrons with consecutive ids
/// starting at `first_id`; event `id` is rendered with derive_seed(seed, id).
std::vector<CherenkovImage> generate_events(std::size_t n_gamma, std::size_t n_hadron, const GeneratorParams& params,
                                            std::uint64_t seed, const CameraGeometry& geometry,
                                            std::uint64_t first_id = 0);

/// Adds an elliptical Gaussian of integral `size` to the image, sampled at
/// pixel centers and multiplied by the pixel area.
void add_blob(std::vector<double>& image, const CameraGeometry& geometry, Point2 center, double length,
              double width, double orientation, double size);

} // namespace pzt
