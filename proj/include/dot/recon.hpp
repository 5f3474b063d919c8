#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dot/forward.hpp"
#include "dot/geometry.hpp"
#include "dot/preprocess.hpp"

namespace dot {

struct LMConfig {
  double lambda_constant = 10.0;
  int max_outer_iterations = 20;
  int stall_window = 2;
  int cg_max_iterations = 200;
  double cg_tolerance = 1e-10;
};

struct SparseConfig {
  int p = 1;  // l_p penalty exponent, 1 or 2
  double lambda_constant = 10.0;
  double cooling_factor = 0.5;
  int stages = 5;
  int inner_iterations = 3;
  double epsilon_smoothing = 1e-6;
  int cg_max_iterations = 200;
  double cg_tolerance = 1e-10;
};

struct ReconResult {
  DeltaMuVolume delta_mu;
  std::vector<double> residual_history;
  int iterations_used = 0;
  bool converged = false;
};

/// lambda = c * max_i (J^H J)_{ii}, computed column-wise.
double lambda_rule(const Eigen::MatrixXcd& jacobian, double c);

/// Measured data restricted to the filtered pairs, detector-major, complex.
Eigen::VectorXcd flatten_pairs(const MultiStaticMatrix& msd,
                               const SourceDetectorConfig& config,
                               const std::vector<std::pair<int, int>>& pairs);

Eigen::MatrixXcd restrict_rows(const Eigen::MatrixXcd& jacobian, int n_sources,
                               const std::vector<std::pair<int, int>>& pairs);

/// Distorted-Born Levenberg-Marquardt: re-linearizes about the current
/// medium each outer iteration, damped normal-equation update, nonnegativity
/// projection, stop when the residual has not improved within the stall
/// window.
ReconResult lm_reconstruct(const Eigen::VectorXcd& data,
                           const OpticalMedium& background,
                           const SourceDetectorConfig& config,
                           const std::vector<std::pair<int, int>>& pairs,
                           const LMConfig& cfg = {},
                           double reff_override = -1.0);

/// l_p penalized least squares by majorization-minimization with homotopy
/// cooling of the penalty weight; single fixed (Born) Jacobian.
ReconResult mm_sparse_reconstruct(const Eigen::VectorXcd& data,
                                  const OpticalMedium& background,
                                  const SourceDetectorConfig& config,
                                  const std::vector<std::pair<int, int>>& pairs,
                                  const SparseConfig& cfg = {},
                                  double reff_override = -1.0);

/// MM core on an explicit Jacobian (also used by the ridge-oracle tests).
Eigen::VectorXd mm_solve(const Eigen::MatrixXcd& jacobian,
                         const Eigen::VectorXcd& data, const SparseConfig& cfg,
                         double lambda, std::vector<double>* residuals = nullptr);

}  // namespace dot
