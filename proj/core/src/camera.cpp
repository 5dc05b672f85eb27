#include "pzt/camera.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

namespace pzt {

namespace {

struct Axial {
  int q = 0;
  int r = 0;
  bool operator<(const Axial& o) const noexcept { return q != o.q ? q < o.q : r < o.r; }
};

// Counter-clockwise from +x.
constexpr std::array<Axial, 6> kDirections{{{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

std::vector<Axial> hex_lattice(std::size_t rings) {
  std::vector<Axial> cells;
  cells.reserve(hex_pixel_count(rings));
  cells.push_back({0, 0});
  for (int ring = 1; ring <= static_cast<int>(rings); ++ring) {
    for (int side = 0; side < 6; ++side) {
      const Axial corner = kDirections[side];
      const Axial step = kDirections[(side + 2) % 6];
      for (int j = 0; j < ring; ++j) {
        cells.push_back({ring * corner.q + j * step.q, ring * corner.r + j * step.r});
      }
    }
  }
  return cells;
}

Point2 axial_to_xy(Axial a, double pitch) {
  static const double kHalfSqrt3 = std::sqrt(3.0) / 2.0;
  return {pitch * (a.q + 0.5 * a.r), pitch * (kHalfSqrt3 * a.r)};
}

Axial rotate60(Axial a) { return {-a.r, a.q + a.r}; }

} // namespace

double CameraGeometry::pixel_circumradius() const noexcept { return pitch_ / std::sqrt(3.0); }

double CameraGeometry::pixel_area() const noexcept { return std::sqrt(3.0) / 2.0 * pitch_ * pitch_; }

CameraGeometry build_geometry(std::size_t rings, double pixel_pitch) {
  if (rings == 0) throw std::invalid_argument("build_geometry: rings must be >= 1");
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
    throw std::invalid_argument("build_geometry: pixel_pitch must be positive");
  }

  const auto cells = hex_lattice(rings);
  std::map<Axial, std::uint32_t> index;
  for (std::uint32_t i = 0; i < cells.size(); ++i) index.emplace(cells[i], i);

  CameraGeometry g;
  g.rings_ = rings;
  g.pitch_ = pixel_pitch;
  g.positions_.reserve(cells.size());
  g.neighbors_.resize(cells.size());
  g.rotation60_.resize(cells.size());

  for (std::uint32_t i = 0; i < cells.size(); ++i) {
    g.positions_.push_back(axial_to_xy(cells[i], pixel_pitch));
    for (const auto& d : kDirections) {
      auto it = index.find({cells[i].q + d.q, cells[i].r + d.r});
      if (it != index.end()) g.neighbors_[i].push_back(it->second);
    }
    std::sort(g.neighbors_[i].begin(), g.neighbors_[i].end());
    g.rotation60_[i] = index.at(rotate60(cells[i]));
  }
  return g;
}

CameraGeometry make_geometry(std::size_t rings, double pixel_pitch, std::vector<Point2> positions,
                             std::vector<std::vector<std::uint32_t>> neighbors) {
  CameraGeometry g = build_geometry(rings, pixel_pitch);
  if (positions.size() != g.pixel_count() || neighbors.size() != g.pixel_count()) {
    throw std::invalid_argument("geometry: pixel count does not match 3 r (r + 1) + 1");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto& ref = g.positions_[i];
    if (std::abs(ref.x - positions[i].x) > 1e-9 * (1.0 + std::abs(ref.x)) ||
        std::abs(ref.y - positions[i].y) > 1e-9 * (1.0 + std::abs(ref.y))) {
      throw std::invalid_argument("geometry: pixel " + std::to_string(i) +
                                  " is not on the canonical hexagonal lattice");
    }
    std::sort(neighbors[i].begin(), neighbors[i].end());
    if (neighbors[i] != g.neighbors_[i]) {
      throw std::invalid_argument("geometry: neighbor list of pixel " + std::to_string(i) +
                                  " is inconsistent with the lattice");
    }
  }
  // Keep the stored coordinates bit-for-bit.
  g.positions_ = std::move(positions);
  return g;
}

DiskMapping map_to_unit_disk(const CameraGeometry& geometry) {
  const auto positions = geometry.pixel_positions();
  double extent = 0.0;
  for (const auto& p : positions) extent = std::max(extent, std::hypot(p.x, p.y));
  extent += geometry.pixel_circumradius();

  DiskMapping m;
  m.scale = 1.0 / extent;
  m.rho.reserve(positions.size());
  m.theta.reserve(positions.size());
  const double w = geometry.pixel_area() * m.scale * m.scale;
  m.weight.assign(positions.size(), w);
  for (const auto& p : positions) {
    m.rho.push_back(std::hypot(p.x, p.y) * m.scale);
    double t = std::atan2(p.y, p.x);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    if (t >= 2.0 * std::numbers::pi) t = 0.0;
    m.theta.push_back(t);
  }
  return m;
}

const char* label_name(Label l) noexcept { return l == Label::gamma ? "gamma" : "hadron"; }

Label parse_label(const std::string& s) {
  if (s == "gamma") return Label::gamma;
  if (s == "hadron") return Label::hadron;
  throw std::invalid_argument("unknown label '" + s + "'");
}

std::vector<double> permute_pixels(std::span<const double> image, std::span<const std::uint32_t> perm) {
  if (image.size() != perm.size()) throw std::invalid_argument("permute_pixels: size mismatch");
  std::vector<double> out(image.size());
  for (std::size_t p = 0; p < image.size(); ++p) out.at(perm[p]) = image[p];
  return out;
}

CherenkovImage clean_image(const CherenkovImage& image, const CameraGeometry& geometry, double core_thr,
                           double boundary_thr) {
  if (!(core_thr >= boundary_thr) || !(boundary_thr >= 0.0)) {
    throw std::invalid_argument("clean_image: thresholds must satisfy core >= boundary >= 0");
  }
  const auto n = geometry.pixel_count();
  if (image.pixel_phe.size() != n) throw std::invalid_argument("clean_image: image/geometry pixel count mismatch");

  std::vector<char> core(n, 0);
  for (std::size_t p = 0; p < n; ++p) core[p] = image.pixel_phe[p] >= core_thr;

  CherenkovImage out = image;
  for (std::size_t p = 0; p < n; ++p) {
    const double v = image.pixel_phe[p];
    bool keep = core[p] != 0;
    if (!keep && v >= boundary_thr) {
      for (auto q : geometry.neighbors(p)) {
        if (core[q]) {
          keep = true;
          break;
        }
      }
    }
    out.pixel_phe[p] = (keep && v > 0.0) ? v : 0.0;
  }
  return out;
}

HillasParams hillas(std::span<const double> pixel_phe, const CameraGeometry& geometry) {
  const auto positions = geometry.pixel_positions();
  if (pixel_phe.size() != positions.size()) throw std::invalid_argument("hillas: image/geometry pixel count mismatch");

  HillasParams h;
  double sx = 0.0, sy = 0.0;
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const double w = pixel_phe[p];
    if (w <= 0.0) continue;
    h.size += w;
    sx += w * positions[p].x;
    sy += w * positions[p].y;
  }
  if (!(h.size > 0.0)) throw EmptyImageError("hillas: image has no positive pixels");
  h.cog = {sx / h.size, sy / h.size};

  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const double w = pixel_phe[p];
    if (w <= 0.0) continue;
    const double dx = positions[p].x - h.cog.x;
    const double dy = positions[p].y - h.cog.y;
    cxx += w * dx * dx;
    cyy += w * dy * dy;
    cxy += w * dx * dy;
  }
  cxx /= h.size;
  cyy /= h.size;
  cxy /= h.size;

  const double half_diff = 0.5 * (cxx - cyy);
  const double root = std::hypot(half_diff, cxy);
  const double mean = 0.5 * (cxx + cyy);
  h.length = std::sqrt(std::max(mean + root, 0.0));
  h.width = std::sqrt(std::max(mean - root, 0.0));
  h.delta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);

  h.dist = std::hypot(h.cog.x, h.cog.y);
  if (h.dist > 0.0) {
    const double ux = std::cos(h.delta), uy = std::sin(h.delta);
    const double dot = ux * h.cog.x + uy * h.cog.y;
    const double cross = ux * h.cog.y - uy * h.cog.x;
    h.alpha = std::atan2(std::abs(cross), std::abs(dot)) * 180.0 / std::numbers::pi;
  }
  return h;
}

} // namespace pzt
