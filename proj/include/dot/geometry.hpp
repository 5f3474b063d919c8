#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dot {

using Vec3 = std::array<double, 3>;

/// Regular isotropic voxel grid. Voxel (ix,iy,iz) is centered at
/// origin + (idx + 0.5) * resolution, linear index x-fastest.
struct VoxelGrid {
  int nx = 0, ny = 0, nz = 0;
  double resolution = 0.0;  // mm per voxel edge
  Vec3 origin = {0.0, 0.0, 0.0};

  std::int64_t voxel_count() const {
    return std::int64_t(nx) * ny * nz;
  }
  std::int64_t linear_index(int ix, int iy, int iz) const {
    return std::int64_t(iz) * ny * nx + std::int64_t(iy) * nx + ix;
  }
  Vec3 voxel_center(std::int64_t i) const;
  Vec3 voxel_center(int ix, int iy, int iz) const;
  /// Nearest voxel to a point in mm (clamped to the grid).
  std::int64_t nearest_voxel(const Vec3& p) const;
  double voxel_volume() const { return resolution * resolution * resolution; }
  /// Physical extents in mm.
  Vec3 dims_mm() const {
    return {nx * resolution, ny * resolution, nz * resolution};
  }
};

struct SourceDetectorConfig {
  std::vector<Vec3> sources;
  std::vector<Vec3> detectors;
  double modulation_frequency_hz = 70e6;
  double source_intensity = 1.0;
};

struct Inclusion {
  Vec3 center;      // mm
  double radius;    // mm
  double contrast;  // multiple of background absorption
};

struct Phantom {
  std::vector<Inclusion> inclusions;
  double background_mu0 = 0.002;   // mm^-1
  double background_musp = 1.0;    // mm^-1
};

struct DeltaMuVolume {
  VoxelGrid grid;
  std::vector<double> values;  // mm^-1, length N
};

struct PhantomSpec {
  int count_min = 1, count_max = 3;
  double radius_min = 2.0, radius_max = 13.0;    // mm
  double contrast_min = 2.0, contrast_max = 5.0;
  double mu0 = 0.002;
  double musp = 1.0;
  int max_attempts = 1000;
};

VoxelGrid build_grid(int nx, int ny, int nz, double resolution);

/// Rectangular probe lattices: sources one transport length (1/musp) below
/// the top face (z max), detectors on the bottom face (z min), both centered
/// on the face footprint.
SourceDetectorConfig grid_probe_layout(const VoxelGrid& grid, double musp,
                                       int n_src_x, int n_src_y, int n_det_x,
                                       int n_det_y);

Phantom random_phantom(std::uint64_t seed, const VoxelGrid& grid,
                       const PhantomSpec& spec);

DeltaMuVolume rasterize(const Phantom& phantom, const VoxelGrid& grid);

}  // namespace dot
