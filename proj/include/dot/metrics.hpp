#pragma once

#include <string>
#include <vector>

namespace dot {

struct MetricsReport {
  double rmse = 0.0;
  double pearson = 0.0;
  double ssim = 0.0;
  double cnr = 0.0;
  std::string estimate_id, label_id;
};

struct SsimConfig {
  int window = 7;       // cubic window edge
  double sigma = 1.5;   // Gaussian window std
  double k1 = 0.01;
  double k2 = 0.03;
};

double rmse(const std::vector<double>& estimate,
            const std::vector<double>& label);

double pearson(const std::vector<double>& estimate,
               const std::vector<double>& label);

/// Mean local SSIM over the 3D volume, Gaussian-weighted windows clipped and
/// renormalized at the borders; dynamic range from the label (1 if
/// degenerate).
double ssim(const std::vector<double>& estimate,
            const std::vector<double>& label, int nx, int ny, int nz,
            const SsimConfig& cfg = {});

/// Contrast-to-noise ratio with count-fraction weights and sample variances;
/// ROI = nonzero label voxels. Returns 0 when the numerator is 0; throws
/// when both variances vanish with a nonzero numerator.
double cnr(const std::vector<double>& estimate,
           const std::vector<double>& label_binary);

struct BoxStats {
  double median = 0.0, q25 = 0.0, q75 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  std::vector<double> outliers;
};

/// Box-plot statistics with the 1.5 IQR whisker rule (type-7 quantiles).
BoxStats box_stats(std::vector<double> values);

struct BatchSummary {
  BoxStats rmse, pearson, ssim, cnr;
};

BatchSummary batch_evaluate(const std::vector<MetricsReport>& reports);

}  // namespace dot
