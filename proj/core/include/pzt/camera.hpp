#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pzt {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Hexagonal camera: a central pixel surrounded by `rings` hexagonal rings.
///
/// Pixel ordering is center first, then ring by ring; each ring starts on the
/// +x axis and runs counter-clockwise. Pixel k of ring r sits at
/// r * d[s] + j * d[s + 2] in axial coordinates, with k = s * r + j and
/// d[0..5] the six unit lattice directions at 0, 60, ..., 300 degrees.
class CameraGeometry {
public:
  CameraGeometry() = default;

  std::size_t rings() const noexcept { return rings_; }
  double pixel_pitch() const noexcept { return pitch_; }
  std::size_t pixel_count() const noexcept { return positions_.size(); }

  std::span<const Point2> pixel_positions() const noexcept { return positions_; }
  const Point2& position(std::size_t pixel) const { return positions_.at(pixel); }

  std::span<const std::vector<std::uint32_t>> neighbors() const noexcept { return neighbors_; }
  const std::vector<std::uint32_t>& neighbors(std::size_t pixel) const { return neighbors_.at(pixel); }

  /// Circumradius of one hexagonal pixel (pitch / sqrt(3)).
  double pixel_circumradius() const noexcept;
  /// Area of one hexagonal pixel ((sqrt(3) / 2) * pitch^2).
  double pixel_area() const noexcept;

  /// Index map for the lattice rotation by +60 degrees: pixel p moves to
  /// rotation[p].
  const std::vector<std::uint32_t>& rotation60() const noexcept { return rotation60_; }

  friend CameraGeometry build_geometry(std::size_t rings, double pixel_pitch);
  friend CameraGeometry make_geometry(std::size_t rings, double pixel_pitch,
                                      std::vector<Point2> positions,
                                      std::vector<std::vector<std::uint32_t>> neighbors);

private:
  std::size_t rings_ = 0;
  double pitch_ = 0.0;
  std::vector<Point2> positions_;
  std::vector<std::vector<std::uint32_t>> neighbors_;
  std::vector<std::uint32_t> rotation60_;
};

/// Number of pixels of a camera with the given ring count: 3 r (r + 1) + 1.
constexpr std::size_t hex_pixel_count(std::size_t rings) noexcept {
  return 3 * rings * (rings + 1) + 1;
}

/// Throws std::invalid_argument for rings == 0 or pitch <= 0.
CameraGeometry build_geometry(std::size_t rings, double pixel_pitch);

/// Rebuilds a geometry from stored positions and neighbor lists (geometry
/// file loading). The data must match build_geometry(rings, pitch) up to
/// 1e-9 in positions; throws std::invalid_argument otherwise.
CameraGeometry make_geometry(std::size_t rings, double pixel_pitch,
                             std::vector<Point2> positions,
                             std::vector<std::vector<std::uint32_t>> neighbors);

/// Polar coordinates of the pixel centers after scaling the camera into the
/// unit disk, plus the per-pixel area element in disk units.
struct DiskMapping {
  double scale = 0.0;
  std::vector<double> rho;
  std::vector<double> theta;  ///< in [0, 2 pi)
  std::vector<double> weight; ///< pixel area times scale^2

  std::size_t pixel_count() const noexcept { return rho.size(); }
};

/// Scales so that the farthest pixel's outer corner touches rho = 1.
DiskMapping map_to_unit_disk(const CameraGeometry& geometry);

enum class Label : std::int8_t { hadron = -1, gamma = 1 };

inline int label_sign(Label l) noexcept { return static_cast<int>(l); }
const char* label_name(Label l) noexcept;
/// "gamma" or "hadron"; anything else throws std::invalid_argument.
Label parse_label(const std::string& s);

struct CherenkovImage {
  std::uint64_t event_id = 0;
  std::optional<Label> label;
  std::optional<std::uint64_t> seed;
  std::vector<double> pixel_phe;
};

/// Applies a pixel permutation: out[perm[p]] = in[p].
std::vector<double> permute_pixels(std::span<const double> image,
                                   std::span<const std::uint32_t> perm);

/// Two-level tail cut. Pixels >= core_thr survive; pixels >= boundary_thr
/// survive if at least one neighbor is a core pixel. Everything else is 0.
/// Throws std::invalid_argument unless core_thr >= boundary_thr >= 0.
CherenkovImage clean_image(const CherenkovImage& image, const CameraGeometry& geometry,
                           double core_thr, double boundary_thr);

struct HillasParams {
  double size = 0.0;
  Point2 cog;
  double length = 0.0;
  double width = 0.0;
  double dist = 0.0;
  double alpha = 0.0; ///< degrees, [0, 90]
  double delta = 0.0; ///< major-axis orientation, radians in (-pi/2, pi/2]
};

class EmptyImageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Second-moment image parameters. Negative intensities are ignored.
/// Throws EmptyImageError if no pixel carries positive signal.
HillasParams hillas(std::span<const double> pixel_phe, const CameraGeometry& geometry);

} // namespace pzt
