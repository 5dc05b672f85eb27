#include "pzt/generator.hpp"

#include "pzt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pzt {

namespace {

void check_interval(const Interval& r, const char* name, bool strictly_positive) {
  const bool ok = std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi &&
                  (strictly_positive ? r.lo > 0.0 : r.lo >= 0.0);
  if (!ok) throw std::invalid_argument(std::string("generator params: bad interval ") + name);
}

} // namespace

void GeneratorParams::validate() const {
  check_interval(gamma.size, "gamma.size", true);
  check_interval(gamma.length, "gamma.length", true);
  check_interval(gamma.width, "gamma.width", true);
  check_interval(gamma.dist, "gamma.dist", false);
  if (!(gamma.alpha_sigma_deg >= 0.0)) throw std::invalid_argument("generator params: alpha_sigma_deg < 0");
  check_interval(hadron.size, "hadron.size", true);
  check_interval(hadron.length, "hadron.length", true);
  check_interval(hadron.width, "hadron.width", true);
  check_interval(hadron.dist, "hadron.dist", false);
  if (hadron.min_blobs < 1 || hadron.max_blobs < hadron.min_blobs) {
    throw std::invalid_argument("generator params: blob count range must satisfy 1 <= min <= max");
  }
  if (!(noise.pedestal_sigma >= 0.0) || !std::isfinite(noise.pedestal_mean)) {
    throw std::invalid_argument("generator params: bad noise parameters");
  }
}

void add_blob(std::vector<double>& image, const CameraGeometry& geometry, Point2 center, double length, double width,
              double orientation, double size) {
  const auto positions = geometry.pixel_positions();
  const double c = std::cos(orientation), s = std::sin(orientation);
  const double norm = size * geometry.pixel_area() / (2.0 * std::numbers::pi * length * width);
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const double dx = positions[p].x - center.x;
    const double dy = positions[p].y - center.y;
    const double u = (c * dx + s * dy) / length;
    const double v = (-s * dx + c * dy) / width;
    image[p] += norm * std::exp(-0.5 * (u * u + v * v));
  }
}

CherenkovImage generate_event(Label label, const GeneratorParams& params, std::uint64_t seed,
                              const CameraGeometry& geometry, std::uint64_t event_id) {
  params.validate();
  SplitMix64 rng(seed);
  const double pitch = geometry.pixel_pitch();
  constexpr double kPi = std::numbers::pi;

  CherenkovImage img;
  img.event_id = event_id;
  img.label = label;
  img.seed = seed;
  img.pixel_phe.assign(geometry.pixel_count(), 0.0);

  if (label == Label::gamma) {
    const auto& g = params.gamma;
    const double size = rng.log_uniform(g.size.lo, g.size.hi);
    double length = rng.uniform(g.length.lo, g.length.hi) * pitch;
    double width = rng.uniform(g.width.lo, g.width.hi) * pitch;
    if (width > length) std::swap(width, length);
    const double dist = rng.uniform(g.dist.lo, g.dist.hi) * pitch;
    const double azimuth = rng.uniform(0.0, 2.0 * kPi);
    const double jitter = g.alpha_sigma_deg * kPi / 180.0 * rng.normal();
    add_blob(img.pixel_phe, geometry, {dist * std::cos(azimuth), dist * std::sin(azimuth)}, length, width,
             azimuth + jitter, size);
  } else {
    const auto& h = params.hadron;
    const auto blobs = static_cast<int>(rng.uniform_int(h.min_blobs, h.max_blobs));
    const double total = rng.log_uniform(h.size.lo, h.size.hi);
    std::vector<double> weights;
    struct Blob {
      Point2 center;
      double length, width, orientation;
    };
    std::vector<Blob> shapes;
    double wsum = 0.0;
    for (int b = 0; b < blobs; ++b) {
      weights.push_back(rng.uniform(0.2, 1.0));
      wsum += weights.back();
      double length = rng.uniform(h.length.lo, h.length.hi) * pitch;
      double width = rng.uniform(h.width.lo, h.width.hi) * pitch;
      if (width > length) std::swap(width, length);
      const double dist = rng.uniform(h.dist.lo, h.dist.hi) * pitch;
      const double azimuth = rng.uniform(0.0, 2.0 * kPi);
      const double orientation = rng.uniform(0.0, kPi);
      shapes.push_back({{dist * std::cos(azimuth), dist * std::sin(azimuth)}, length, width, orientation});
    }
    for (int b = 0; b < blobs; ++b) {
      const auto& sh = shapes[b];
      add_blob(img.pixel_phe, geometry, sh.center, sh.length, sh.width, sh.orientation, total * weights[b] / wsum);
    }
  }

  const auto& noise = params.noise;
  for (auto& v : img.pixel_phe) {
    v += noise.pedestal_mean;
    if (noise.pedestal_sigma > 0.0) v += noise.pedestal_sigma * rng.normal();
  }
  return img;
}

std::vector<CherenkovImage> generate_events(std::size_t n_gamma, std::size_t n_hadron, const GeneratorParams& params,
                                            std::uint64_t seed, const CameraGeometry& geometry, std::uint64_t first_id) {
  params.validate();
  std::vector<CherenkovImage> out;
  out.reserve(n_gamma + n_hadron);
  for (std::size_t i = 0; i < n_gamma + n_hadron; ++i) {
    const std::uint64_t id = first_id + i;
    const Label label = i < n_gamma ? Label::gamma : Label::hadron;
    out.push_back(generate_event(label, params, derive_seed(seed, id), geometry, id));
  }
  return out;
}

} // namespace pzt
