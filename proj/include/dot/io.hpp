#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dot/geometry.hpp"
#include "dot/network.hpp"
#include "dot/preprocess.hpp"

namespace dot {

struct DatasetManifest {
  int version = 1;
  VoxelGrid grid;                  // reconstruction (label) grid
  int n_src_x = 0, n_src_y = 0, n_det_x = 0, n_det_y = 0;
  double mu0 = 0.0, musp = 0.0, refractive_index = 1.33;
  double modulation_frequency_hz = 70e6;
  double rho_max = 51.0;
  Calibration calibration;
  int meas_length = 0;
  int sample_count = 0;
  int train_count = 0, val_count = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> offsets;  // byte offset of each sample payload
};

/// Writes `<stem>.json` (manifest) and `<stem>.bin` (little-endian float32
/// payload: input then label per sample, CRC32 trailer each).
void write_dataset(const std::vector<net::Sample>& samples,
                   DatasetManifest manifest, const std::string& stem);

std::vector<net::Sample> read_dataset(const std::string& stem,
                                      DatasetManifest* manifest = nullptr);

struct CheckpointMeta {
  net::NetworkSpec spec;
  std::uint64_t seed = 0;
  int epoch = 0;
  double val_loss = 0.0;
};

/// `<stem>.json` + `<stem>.bin` (float64 LE: fc weights, fc bias, conv
/// filters layer by layer). Round trip is bit-exact.
void save_checkpoint(const net::NetworkParams& params,
                     const CheckpointMeta& meta, const std::string& stem);

net::NetworkParams load_checkpoint(const std::string& stem,
                                   CheckpointMeta* meta = nullptr);

/// Legacy ASCII VTK structured-points export, scalar field "delta_mu".
void export_vtk(const DeltaMuVolume& volume, const std::string& path);

}  // namespace dot
