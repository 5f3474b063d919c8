#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "dot/geometry.hpp"

namespace dot {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLightVacuum = 2.998e11;  // mm/s

/// Heterogeneous optical medium on a voxel grid. D[i] = 1/(3(mu+musp)).
struct OpticalMedium {
  VoxelGrid grid;
  std::vector<double> mu;    // absorption, mm^-1
  std::vector<double> musp;  // reduced scattering, mm^-1
  double refractive_index = 1.33;

  static OpticalMedium homogeneous(const VoxelGrid& grid, double mu0,
                                   double musp0, double refractive_index = 1.33);

  double diffusion(std::size_t i) const {
    return 1.0 / (3.0 * (mu[i] + musp[i]));
  }
  double light_speed() const { return kSpeedOfLightVacuum / refractive_index; }
};

/// Effective boundary reflection coefficient for a refractive mismatch
/// (Groenhuis polynomial approximation).
double effective_reflection(double refractive_index);

/// Discretized (k^2 - div D grad) with Robin boundary rows. Complex-symmetric.
struct DiffusionOperator {
  Eigen::SparseMatrix<Complex> matrix;  // N x N, 7-point stencil
  VoxelGrid grid;
  double omega = 0.0;

  struct Solver;
  std::shared_ptr<Solver> solver;  // lazily built factorization / Krylov state
};

using FluenceField = Eigen::VectorXcd;

struct MultiStaticMatrix {
  Eigen::MatrixXcd data;  // N_d x N_t, entry (n,m) = u_s^m(d_n)
  std::vector<double> separation;  // row-major (detector-major) pair distances
};

struct SolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 20000;
  std::int64_t direct_threshold = 50000;  // direct factorization below this N
};

/// Optional R_eff override: when >= 0 it replaces the value derived from the
/// medium's refractive index (used for boundary-mismatch experiments).
DiffusionOperator assemble_operator(const OpticalMedium& medium, double omega,
                                    double reff_override = -1.0);

FluenceField solve(const DiffusionOperator& op, const Eigen::VectorXcd& source,
                   const SolveOptions& opts = {});

/// Unit point source at the voxel nearest to `point`, delta scaled by
/// 1/voxel_volume.
FluenceField green_function(const DiffusionOperator& op, const Vec3& point,
                            const SolveOptions& opts = {});

/// Exact nonlinear forward map M[delta_mu]: perturbed-minus-background
/// fluence sampled at the detectors, one column per source.
MultiStaticMatrix multistatic(const OpticalMedium& background,
                              const DeltaMuVolume& delta_mu,
                              const SourceDetectorConfig& config,
                              double reff_override = -1.0,
                              const SolveOptions& opts = {});

/// Factorized background operator plus the incident fields, reusable across
/// phantoms that share the same background medium and probe. Lets the
/// perturbed solves run as defect-correction iterations preconditioned by the
/// background factorization instead of refactorizing per phantom.
struct FastHomogeneousSolver;  // separable fast-diagonalization solver

struct BackgroundWorkspace {
  OpticalMedium background;
  double reff_override = -1.0;
  DiffusionOperator op0;
  std::vector<FluenceField> u0;        // one incident field per source
  std::vector<std::int64_t> det_voxel;
  // Set when the background is homogeneous: preconditioner applications run
  // through per-axis eigendecompositions instead of the sparse factorization.
  std::shared_ptr<const FastHomogeneousSolver> fast;
};

BackgroundWorkspace make_background_workspace(const OpticalMedium& background,
                                              const SourceDetectorConfig& config,
                                              double reff_override = -1.0,
                                              const SolveOptions& opts = {});

MultiStaticMatrix multistatic(const BackgroundWorkspace& workspace,
                              const DeltaMuVolume& delta_mu,
                              const SourceDetectorConfig& config,
                              const SolveOptions& opts = {});

/// Born-linearized operator: row (pair n,m), column i holds
/// -G0(d_n, x_i) * u0^m(x_i) * voxel_volume. Rows are detector-major.
Eigen::MatrixXcd born_jacobian(const OpticalMedium& background,
                               const SourceDetectorConfig& config,
                               double reff_override = -1.0,
                               const SolveOptions& opts = {});

/// Diagnostic: relative Lippman-Schwinger residual of a PDE solution pair.
double lippman_schwinger_residual(const FluenceField& u, const FluenceField& u0,
                                  const DeltaMuVolume& delta_mu,
                                  const Eigen::MatrixXcd& green_columns);

/// Infinite-medium diffusion kernel |S0 e^{-kappa r} / (4 pi D r)|.
Complex infinite_medium_green(double r, double mu, double musp, double omega,
                              double refractive_index);

}  // namespace dot
