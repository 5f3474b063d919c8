#include <fstream>
#include <stdexcept>

#include "dot/io.hpp"

namespace dot {

void export_vtk(const DeltaMuVolume& volume, const std::string& path) {
  const VoxelGrid& g = volume.grid;
  if (volume.values.size() != std::size_t(g.voxel_count()))
    throw std::invalid_argument("export_vtk: volume shape mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("export_vtk: cannot open " + path);
  out << "# vtk DataFile Version 3.0\n";
  out << "delta_mu volume\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.nx << " " << g.ny << " " << g.nz << "\n";
  out << "ORIGIN " << g.origin[0] << " " << g.origin[1] << " " << g.origin[2]
      << "\n";
  out << "SPACING " << g.resolution << " " << g.resolution << " "
      << g.resolution << "\n";
  out << "POINT_DATA " << g.voxel_count() << "\n";
  out << "SCALARS delta_mu float 1\n";
  out << "LOOKUP_TABLE default\n";
  // x-fastest order, matching the linear voxel index.
  for (std::size_t i = 0; i < volume.values.size(); ++i)
    out << float(volume.values[i]) << "\n";
  if (!out) throw std::runtime_error("export_vtk: write failure " + path);
}

}  // namespace dot
