#include "dot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace dot {
namespace {

double dist(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

Vec3 VoxelGrid::voxel_center(int ix, int iy, int iz) const {
  return {origin[0] + (ix + 0.5) * resolution,
          origin[1] + (iy + 0.5) * resolution,
          origin[2] + (iz + 0.5) * resolution};
}

Vec3 VoxelGrid::voxel_center(std::int64_t i) const {
  const int ix = int(i % nx);
  const int iy = int((i / nx) % ny);
  const int iz = int(i / (std::int64_t(nx) * ny));
  return voxel_center(ix, iy, iz);
}

std::int64_t VoxelGrid::nearest_voxel(const Vec3& p) const {
  auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  const int ix = clampi(int(std::floor((p[0] - origin[0]) / resolution)), nx);
  const int iy = clampi(int(std::floor((p[1] - origin[1]) / resolution)), ny);
  const int iz = clampi(int(std::floor((p[2] - origin[2]) / resolution)), nz);
  return linear_index(ix, iy, iz);
}

VoxelGrid build_grid(int nx, int ny, int nz, double resolution) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("build_grid: voxel counts must be >= 1");
  if (!(resolution > 0.0))
    throw std::invalid_argument("build_grid: resolution must be > 0");
  VoxelGrid g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.resolution = resolution;
  return g;
}

SourceDetectorConfig grid_probe_layout(const VoxelGrid& grid, double musp,
                                       int n_src_x, int n_src_y, int n_det_x,
                                       int n_det_y) {
  if (n_src_x < 1 || n_src_y < 1 || n_det_x < 1 || n_det_y < 1)
    throw std::invalid_argument("grid_probe_layout: counts must be >= 1");
  if (!(musp > 0.0))
    throw std::invalid_argument("grid_probe_layout: musp must be > 0");
  const Vec3 dims = grid.dims_mm();
  // Lattice pitch chosen so the lattice is centered with a half-pitch margin;
  // a single row/column sits at the face center.
  auto lattice = [&](int cx, int cy, double z) {
    std::vector<Vec3> pts;
    pts.reserve(std::size_t(cx) * cy);
    const double px = dims[0] / cx;
    const double py = dims[1] / cy;
    for (int j = 0; j < cy; ++j)
      for (int i = 0; i < cx; ++i)
        pts.push_back({grid.origin[0] + (i + 0.5) * px,
                       grid.origin[1] + (j + 0.5) * py, z});
    return pts;
  };
  const double z_top = grid.origin[2] + dims[2];
  const double z_bottom = grid.origin[2];
  const double src_depth = 1.0 / musp;  // one transport length below the top
  if (src_depth >= dims[2])
    throw std::invalid_argument(
        "grid_probe_layout: source depth exceeds grid thickness");
  SourceDetectorConfig cfg;
  cfg.sources = lattice(n_src_x, n_src_y, z_top - src_depth);
  cfg.detectors = lattice(n_det_x, n_det_y, z_bottom);
  return cfg;
}

Phantom random_phantom(std::uint64_t seed, const VoxelGrid& grid,
                       const PhantomSpec& spec) {
  const Vec3 dims = grid.dims_mm();
  const double half_min = 0.5 * std::min({dims[0], dims[1], dims[2]});
  if (!(spec.radius_min > 0.0) || spec.radius_max >= half_min)
    throw std::invalid_argument("random_phantom: radius range out of bounds");
  if (!(spec.contrast_min > 1.0))
    throw std::invalid_argument("random_phantom: contrast must exceed 1");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count_dist(spec.count_min, spec.count_max);
  std::uniform_real_distribution<double> radius_dist(spec.radius_min,
                                                     spec.radius_max);
  std::uniform_real_distribution<double> contrast_dist(spec.contrast_min,
                                                       spec.contrast_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Phantom ph;
  ph.background_mu0 = spec.mu0;
  ph.background_musp = spec.musp;
  const int count = count_dist(rng);

  for (int k = 0; k < count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
      Inclusion inc;
      inc.radius = radius_dist(rng);
      inc.contrast = contrast_dist(rng);
      bool fits = true;
      for (int a = 0; a < 3; ++a) {
        const double lo = grid.origin[a] + inc.radius;
        const double hi = grid.origin[a] + dims[a] - inc.radius;
        if (lo >= hi) {
          fits = false;
          break;
        }
        inc.center[a] = lo + unit(rng) * (hi - lo);
      }
      if (!fits) continue;
      bool overlaps = false;
      for (const auto& other : ph.inclusions)
        if (dist(inc.center, other.center) <= inc.radius + other.radius) {
          overlaps = true;
          break;
        }
      if (overlaps) continue;
      ph.inclusions.push_back(inc);
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error(
          "random_phantom: generation failed after " +
          std::to_string(spec.max_attempts) + " attempts");
  }
  return ph;
}

DeltaMuVolume rasterize(const Phantom& phantom, const VoxelGrid& grid) {
  DeltaMuVolume vol;
  vol.grid = grid;
  vol.values.assign(std::size_t(grid.voxel_count()), 0.0);
  for (const auto& inc : phantom.inclusions) {
    const double delta = phantom.background_mu0 * (inc.contrast - 1.0);
    // Bounding box in voxel indices, clipped to the grid.
    auto lo = [&](int a) {
      return std::max(0, int(std::floor((inc.center[a] - inc.radius -
                                         grid.origin[a]) /
                                        grid.resolution)));
    };
    const int x0 = lo(0), y0 = lo(1), z0 = lo(2);
    auto hi = [&](int a, int n) {
      return std::min(n - 1, int(std::ceil((inc.center[a] + inc.radius -
                                            grid.origin[a]) /
                                           grid.resolution)));
    };
    const int x1 = hi(0, grid.nx), y1 = hi(1, grid.ny), z1 = hi(2, grid.nz);
    const double r2 = inc.radius * inc.radius;
    for (int iz = z0; iz <= z1; ++iz)
      for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) {
          const Vec3 c = grid.voxel_center(ix, iy, iz);
          const double dx = c[0] - inc.center[0];
          const double dy = c[1] - inc.center[1];
          const double dz = c[2] - inc.center[2];
          if (dx * dx + dy * dy + dz * dz <= r2)
            vol.values[std::size_t(grid.linear_index(ix, iy, iz))] += delta;
        }
  }
  return vol;
}

}  // namespace dot
