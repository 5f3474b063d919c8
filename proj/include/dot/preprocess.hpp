#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dot/forward.hpp"
#include "dot/geometry.hpp"

namespace dot {

/// Real amplitude per filtered source-detector pair; the network input after
/// preprocessing.
struct MeasurementVector {
  std::vector<double> values;
  // (detector index, source index), detector-major order.
  std::vector<std::pair<int, int>> pair_index;
  std::vector<double> separation;  // mm per entry
};

struct Calibration {
  double scale = 1.0;
  double offset = 0.0;
};

struct BulkFit {
  double mu_bulk = 0.0;   // mm^-1
  double d_bulk = 0.0;    // mm
  bool converged = false;
  int iterations = 0;
};

/// Pairs with separation < rho_max, detector-major order.
std::vector<std::pair<int, int>> filter_pairs(const SourceDetectorConfig& config,
                                              double rho_max = 51.0);

/// Amplitude vector |u_s| over the filtered pairs of a multi-static matrix.
MeasurementVector amplitudes(const MultiStaticMatrix& msd,
                             const SourceDetectorConfig& config,
                             const std::vector<std::pair<int, int>>& pairs);

/// Affine envelope match: measured ~ scale * simulated + offset, the offset
/// fitted on 5 mm distance-binned envelope maxima, the scale pinned so the
/// calibrated peak equals the measured peak exactly.
Calibration calibrate(const MeasurementVector& measured,
                      const MeasurementVector& simulated,
                      double bin_width_mm = 5.0);

MeasurementVector apply_calibration(const MeasurementVector& v,
                                    const Calibration& cal);

/// Newton-Raphson fit of homogeneous bulk (mu, D) to log-amplitudes against
/// the infinite-medium kernel.
BulkFit fit_bulk(const MeasurementVector& amplitudes, double omega,
                 double refractive_index = 1.33, double mu_init = 0.005,
                 double d_init = 0.3);

/// (v - mean) / max|v - mean|.
MeasurementVector normalize_input(const MeasurementVector& v);

struct WeightedLabel {
  DeltaMuVolume volume;
  double factor = 1.0;
};

WeightedLabel weight_label(const DeltaMuVolume& volume);
DeltaMuVolume unweight_label(const DeltaMuVolume& weighted, double factor);

std::vector<double> add_gaussian(const std::vector<double>& v, double sigma,
                                 std::uint64_t seed);
std::vector<double> add_noise_snr(const std::vector<double>& v, double snr_db,
                                  std::uint64_t seed);

}  // namespace dot
