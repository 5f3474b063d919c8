#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dot/forward.hpp"
#include "dot/geometry.hpp"
#include "dot/io.hpp"
#include "dot/metrics.hpp"
#include "dot/network.hpp"
#include "dot/preprocess.hpp"
#include "dot/recon.hpp"

namespace dot {

/// One experiment: grid, probe, optics, phantom recipe, network width.
struct ExperimentConfig {
  int nx = 24, ny = 24, nz = 8;
  double resolution = 2.5;  // mm
  int n_src_x = 2, n_src_y = 4, n_det_x = 4, n_det_y = 4;
  double mu0 = 0.002, musp = 1.0;
  double refractive_index = 1.33;
  double modulation_frequency_hz = 70e6;
  double rho_max = 51.0;
  // Desk-scale default: inclusions must fit the 20 mm slab thickness.
  double radius_min = 2.0, radius_max = 8.0;
  double contrast_min = 2.0, contrast_max = 5.0;
  int count_min = 1, count_max = 3;
  int refine = 2;  // inverse-crime guard: forward grid refinement factor
  int channels = 8;
  int denoise_layers = 1;
  double dropout_p = 0.7;
  double input_noise_sigma = 0.2;
};

ExperimentConfig parse_config(const std::string& path);

VoxelGrid coarse_grid(const ExperimentConfig& cfg);
VoxelGrid fine_grid(const ExperimentConfig& cfg);
SourceDetectorConfig probe(const ExperimentConfig& cfg);
PhantomSpec phantom_spec(const ExperimentConfig& cfg);

struct GeneratedSample {
  net::Sample sample;                 // normalized input, weighted label
  std::vector<double> raw_amplitudes; // pre-normalization |u_s| per pair
  Eigen::VectorXcd data_pairs;        // complex scattered data per pair
  DeltaMuVolume label_physical;       // coarse-grid delta-mu, mm^-1
  double weight_factor = 1.0;
  Phantom phantom;
};

/// Forward data on the refined grid, labels on the reconstruction grid.
/// reff_override > 0 replaces the boundary reflection used for the forward
/// solve (boundary-mismatch experiments).
GeneratedSample generate_sample(const ExperimentConfig& cfg,
                                std::uint64_t seed,
                                double reff_override = -1.0,
                                const BackgroundWorkspace* workspace = nullptr,
                                const SolveOptions& opts = {});

/// Factorized fine-grid background shared across samples of one experiment;
/// pass it to generate_sample to avoid refactorizing per phantom.
BackgroundWorkspace make_fine_workspace(const ExperimentConfig& cfg,
                                        double reff_override = -1.0);

net::NetworkSpec make_network_spec(const ExperimentConfig& cfg,
                                   int meas_length);

DatasetManifest make_manifest(const ExperimentConfig& cfg, int meas_length,
                              int train_count, int val_count,
                              std::uint64_t base_seed);

/// Per-pair metrics in the weighted-label scale; ROI mask from the label.
MetricsReport evaluate_pair(const std::vector<double>& estimate_weighted,
                            const std::vector<double>& label_weighted,
                            const VoxelGrid& grid);

/// Weight factor of a weighted (or physical) label volume: N over nonzeros.
double label_weight_factor(const std::vector<double>& label);

/// Network inference on a raw (unnormalized) measurement vector: normalize,
/// forward in infer mode. Returns the weighted-scale volume.
std::vector<double> infer_weighted(const net::NetworkSpec& spec,
                                   const net::NetworkParams& params,
                                   const std::vector<double>& raw_amplitudes);

}  // namespace dot
