#include "dot/forward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

namespace dot {

OpticalMedium OpticalMedium::homogeneous(const VoxelGrid& grid, double mu0,
                                         double musp0,
                                         double refractive_index) {
  OpticalMedium m;
  m.grid = grid;
  m.mu.assign(std::size_t(grid.voxel_count()), mu0);
  m.musp.assign(std::size_t(grid.voxel_count()), musp0);
  m.refractive_index = refractive_index;
  return m;
}

double effective_reflection(double n) {
  // Groenhuis et al. polynomial fit of the internal reflection coefficient.
  return -1.440 / (n * n) + 0.710 / n + 0.668 + 0.0636 * n;
}

struct DiffusionOperator::Solver {
  bool direct = false;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<Complex>,
                  Eigen::DiagonalPreconditioner<Complex>>
      krylov;
};

DiffusionOperator assemble_operator(const OpticalMedium& medium, double omega,
                                    double reff_override) {
  const VoxelGrid& g = medium.grid;
  const std::int64_t n = g.voxel_count();
  if (n <= 0 || medium.mu.size() != std::size_t(n) ||
      medium.musp.size() != std::size_t(n))
    throw std::invalid_argument("assemble_operator: inconsistent medium");

  const double h = g.resolution;
  const double inv_h2 = 1.0 / (h * h);
  const double c0 = medium.light_speed();
  const double reff = reff_override >= 0.0
                          ? reff_override
                          : effective_reflection(medium.refractive_index);
  const double robin_scale = 2.0 * (1.0 + reff) / (1.0 - reff);

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(std::size_t(n) * 7);

  const int strides[3] = {1, g.nx, g.nx * g.ny};
  const int extents[3] = {g.nx, g.ny, g.nz};

  for (int iz = 0; iz < g.nz; ++iz)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const std::int64_t i = g.linear_index(ix, iy, iz);
        const double di = medium.diffusion(std::size_t(i));
        const Complex k2(medium.mu[std::size_t(i)], -omega / c0);
        double diag_real = 0.0;
        const int idx[3] = {ix, iy, iz};
        for (int axis = 0; axis < 3; ++axis)
          for (int dir = -1; dir <= 1; dir += 2) {
            const int pos = idx[axis] + dir;
            if (pos >= 0 && pos < extents[axis]) {
              const std::int64_t j = i + dir * strides[axis];
              const double dj = medium.diffusion(std::size_t(j));
              const double dface = 2.0 * di * dj / (di + dj);
              diag_real += dface * inv_h2;
              trips.emplace_back(int(i), int(j), Complex(-dface * inv_h2));
            } else {
              // Robin boundary via ghost-point elimination:
              // u_g = c * u_b with c = (l/h - 1/2)/(l/h + 1/2).
              const double ell = di * robin_scale;
              const double c = (ell / h - 0.5) / (ell / h + 0.5);
              diag_real += di * inv_h2 * (1.0 - c);
            }
          }
        trips.emplace_back(int(i), int(i), Complex(diag_real) + k2);
      }

  DiffusionOperator op;
  op.grid = g;
  op.omega = omega;
  op.matrix.resize(int(n), int(n));
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.matrix.makeCompressed();
  op.solver = std::make_shared<DiffusionOperator::Solver>();
  return op;
}

FluenceField solve(const DiffusionOperator& op, const Eigen::VectorXcd& source,
                   const SolveOptions& opts) {
  if (source.size() != op.matrix.rows())
    throw std::invalid_argument("solve: source length mismatch");
  if (source.norm() == 0.0) return Eigen::VectorXcd::Zero(source.size());

  auto& s = *op.solver;
  const bool use_direct = op.matrix.rows() <= opts.direct_threshold;
  if (use_direct) {
    if (!s.direct) {
      s.lu.compute(op.matrix);
      if (s.lu.info() != Eigen::Success)
        throw std::runtime_error("solve: sparse factorization failed");
      s.direct = true;
    }
    Eigen::VectorXcd u = s.lu.solve(source);
    const double res = (op.matrix * u - source).norm() / source.norm();
    if (!(res <= opts.tolerance))
      throw std::runtime_error("solve: direct residual " + std::to_string(res));
    return u;
  }
  s.krylov.setTolerance(opts.tolerance);
  s.krylov.setMaxIterations(opts.max_iterations);
  s.krylov.compute(op.matrix);
  Eigen::VectorXcd u = s.krylov.solve(source);
  if (s.krylov.info() != Eigen::Success)
    throw std::runtime_error("solve: Krylov stalled, residual " +
                             std::to_string(s.krylov.error()));
  return u;
}

FluenceField green_function(const DiffusionOperator& op, const Vec3& point,
                            const SolveOptions& opts) {
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(op.matrix.rows());
  rhs[op.grid.nearest_voxel(point)] = 1.0 / op.grid.voxel_volume();
  return solve(op, rhs, opts);
}

MultiStaticMatrix multistatic(const OpticalMedium& background,
                              const DeltaMuVolume& delta_mu,
                              const SourceDetectorConfig& config,
                              double reff_override, const SolveOptions& opts) {
  const VoxelGrid& g = background.grid;
  if (delta_mu.values.size() != std::size_t(g.voxel_count()))
    throw std::invalid_argument("multistatic: delta_mu shape mismatch");
  const double omega = 2.0 * M_PI * config.modulation_frequency_hz;

  OpticalMedium perturbed = background;
  for (std::size_t i = 0; i < perturbed.mu.size(); ++i)
    perturbed.mu[i] += delta_mu.values[i];

  DiffusionOperator op0 = assemble_operator(background, omega, reff_override);
  DiffusionOperator op1 = assemble_operator(perturbed, omega, reff_override);

  const std::size_t nt = config.sources.size();
  const std::size_t nd = config.detectors.size();
  std::vector<std::int64_t> det_voxel(nd);
  for (std::size_t n = 0; n < nd; ++n)
    det_voxel[n] = g.nearest_voxel(config.detectors[n]);

  MultiStaticMatrix out;
  out.data.resize(Eigen::Index(nd), Eigen::Index(nt));
  out.separation.resize(nd * nt);

  for (std::size_t m = 0; m < nt; ++m) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(g.voxel_count());
    rhs[g.nearest_voxel(config.sources[m])] =
        config.source_intensity / g.voxel_volume();
    const Eigen::VectorXcd u0 = solve(op0, rhs, opts);
    const Eigen::VectorXcd u1 = solve(op1, rhs, opts);
    for (std::size_t n = 0; n < nd; ++n) {
      out.data(Eigen::Index(n), Eigen::Index(m)) =
          u1[det_voxel[n]] - u0[det_voxel[n]];
      const Vec3& t = config.sources[m];
      const Vec3& d = config.detectors[n];
      const double dx = t[0] - d[0], dy = t[1] - d[1], dz = t[2] - d[2];
      out.separation[n * nt + m] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  }
  return out;
}

/// Fast solver for homogeneous media on a box: the operator separates as
/// k^2 I + Tx (+) Ty (+) Tz with real symmetric tridiagonal per-axis parts
/// (constant D, Robin ends), so A = (Qx x Qy x Qz) diag (.)^T and a solve is
/// six dense axis transforms plus a pointwise division.
struct FastHomogeneousSolver {
  VoxelGrid grid;
  Eigen::MatrixXcd qx, qy, qz;  // eigenvectors (complex copies for GEMM)
  Eigen::VectorXd lx, ly, lz;   // eigenvalues
  Complex k2;

  static Eigen::MatrixXd axis_operator(int n, double d, double h, double c) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    const double w = d / (h * h);
    for (int i = 0; i < n; ++i) {
      double diag = 0.0;
      if (i > 0) {
        diag += w;
        t(i, i - 1) = -w;
      } else {
        diag += w * (1.0 - c);
      }
      if (i + 1 < n) {
        diag += w;
        t(i, i + 1) = -w;
      } else {
        diag += w * (1.0 - c);
      }
      t(i, i) = diag;
    }
    return t;
  }

  FastHomogeneousSolver(const OpticalMedium& medium, double omega,
                        double reff_override) {
    grid = medium.grid;
    const double mu0 = medium.mu[0];
    const double d = medium.diffusion(0);
    const double h = grid.resolution;
    const double reff = reff_override >= 0.0
                            ? reff_override
                            : effective_reflection(medium.refractive_index);
    const double ell = d * 2.0 * (1.0 + reff) / (1.0 - reff);
    const double c = (ell / h - 0.5) / (ell / h + 0.5);
    k2 = Complex(mu0, -omega / medium.light_speed());

    auto decompose = [&](int n, Eigen::MatrixXcd& q, Eigen::VectorXd& l) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          axis_operator(n, d, h, c));
      q = es.eigenvectors().cast<Complex>();
      l = es.eigenvalues();
    };
    decompose(grid.nx, qx, lx);
    decompose(grid.ny, qy, ly);
    decompose(grid.nz, qz, lz);
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const {
    const int nx = grid.nx, ny = grid.ny, nz = grid.nz;
    Eigen::VectorXcd w = b;
    {  // x transform: w <- Qx^T w along x
      Eigen::Map<Eigen::MatrixXcd> m(w.data(), nx, ny * nz);
      m = qx.transpose() * m;
    }
    for (int z = 0; z < nz; ++z) {  // y transform per z slab
      Eigen::Map<Eigen::MatrixXcd> m(w.data() + std::int64_t(z) * nx * ny, nx,
                                     ny);
      m = m * qy;
    }
    {  // z transform
      Eigen::Map<Eigen::MatrixXcd> m(w.data(), nx * ny, nz);
      m = m * qz;
    }
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
          w[std::int64_t(z) * nx * ny + std::int64_t(y) * nx + x] /=
              k2 + lx[x] + ly[y] + lz[z];
    {
      Eigen::Map<Eigen::MatrixXcd> m(w.data(), nx * ny, nz);
      m = m * qz.transpose();
    }
    for (int z = 0; z < nz; ++z) {
      Eigen::Map<Eigen::MatrixXcd> m(w.data() + std::int64_t(z) * nx * ny, nx,
                                     ny);
      m = m * qy.transpose();
    }
    {
      Eigen::Map<Eigen::MatrixXcd> m(w.data(), nx, ny * nz);
      m = qx * m;
    }
    return w;
  }
};

namespace {

bool is_homogeneous(const OpticalMedium& m) {
  for (double v : m.mu)
    if (v != m.mu[0]) return false;
  for (double v : m.musp)
    if (v != m.musp[0]) return false;
  return true;
}

}  // namespace

BackgroundWorkspace make_background_workspace(const OpticalMedium& background,
                                              const SourceDetectorConfig& config,
                                              double reff_override,
                                              const SolveOptions& opts) {
  const double omega = 2.0 * M_PI * config.modulation_frequency_hz;
  BackgroundWorkspace ws;
  ws.background = background;
  ws.reff_override = reff_override;
  ws.op0 = assemble_operator(background, omega, reff_override);
  const VoxelGrid& g = background.grid;

  if (is_homogeneous(background)) {
    auto fast = std::make_shared<FastHomogeneousSolver>(background, omega,
                                                        reff_override);
    // The separable decomposition must reproduce the assembled operator;
    // verify on a random right-hand side before trusting it.
    const Eigen::VectorXcd probe = Eigen::VectorXcd::Random(g.voxel_count());
    const Eigen::VectorXcd x = fast->solve(probe);
    if ((ws.op0.matrix * x - probe).norm() <= 1e-10 * probe.norm())
      ws.fast = std::move(fast);
  }

  ws.u0.resize(config.sources.size());
  for (std::size_t m = 0; m < config.sources.size(); ++m) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(g.voxel_count());
    rhs[g.nearest_voxel(config.sources[m])] =
        config.source_intensity / g.voxel_volume();
    // solve() also primes the factorization for later preconditioning.
    ws.u0[m] = ws.fast ? ws.fast->solve(rhs) : solve(ws.op0, rhs, opts);
  }
  ws.det_voxel.resize(config.detectors.size());
  for (std::size_t n = 0; n < config.detectors.size(); ++n)
    ws.det_voxel[n] = g.nearest_voxel(config.detectors[n]);
  return ws;
}

MultiStaticMatrix multistatic(const BackgroundWorkspace& ws,
                              const DeltaMuVolume& delta_mu,
                              const SourceDetectorConfig& config,
                              const SolveOptions& opts) {
  const VoxelGrid& g = ws.background.grid;
  if (delta_mu.values.size() != std::size_t(g.voxel_count()))
    throw std::invalid_argument("multistatic: delta_mu shape mismatch");
  const double omega = 2.0 * M_PI * config.modulation_frequency_hz;

  OpticalMedium perturbed = ws.background;
  for (std::size_t i = 0; i < perturbed.mu.size(); ++i)
    perturbed.mu[i] += delta_mu.values[i];
  DiffusionOperator op1 =
      assemble_operator(perturbed, omega, ws.reff_override);

  const std::size_t nt = config.sources.size();
  const std::size_t nd = config.detectors.size();
  if (ws.u0.size() != nt || ws.det_voxel.size() != nd)
    throw std::invalid_argument("multistatic: workspace/probe mismatch");

  // Solve for the scattered fields directly: A1 us = (A0 - A1) u0, all
  // sources batched. Tolerances are then relative to the scattered field
  // itself, not the (much larger) incident field. Defect correction
  // preconditioned by the background factorization contracts fast because
  // the perturbation is a small diagonal-dominant shift.
  const Eigen::Index n = op1.matrix.rows();
  Eigen::MatrixXcd u0mat(n, Eigen::Index(nt));
  for (std::size_t m = 0; m < nt; ++m) u0mat.col(Eigen::Index(m)) = ws.u0[m];
  const Eigen::SparseMatrix<Complex> da = ws.op0.matrix - op1.matrix;
  const Eigen::MatrixXcd rhs = da * u0mat;  // = -(dA) u0

  if (!ws.fast && !ws.op0.solver->direct)
    throw std::logic_error("multistatic: workspace factorization not primed");
  auto precondition = [&](const Eigen::MatrixXcd& r) -> Eigen::MatrixXcd {
    if (!ws.fast) return ws.op0.solver->lu.solve(r);
    Eigen::MatrixXcd out(r.rows(), r.cols());
    for (Eigen::Index m = 0; m < r.cols(); ++m)
      out.col(m) = ws.fast->solve(r.col(m));
    return out;
  };

  // Iterate until the detector readings settle: successive iterates change
  // by a factor ~ contraction rate, so stabilization to `tol` bounds the
  // remaining error by ~tol/(1-q). Columns with zero rhs stay zero.
  const Eigen::VectorXd rhs_norms = rhs.colwise().norm();
  const double tol = opts.tolerance;
  Eigen::MatrixXcd us = Eigen::MatrixXcd::Zero(n, Eigen::Index(nt));
  Eigen::MatrixXcd det_prev =
      Eigen::MatrixXcd::Zero(Eigen::Index(nd), Eigen::Index(nt));
  bool settled = rhs_norms.maxCoeff() == 0.0;
  for (int it = 0; it < 60 && !settled; ++it) {
    us += precondition(rhs - op1.matrix * us);
    Eigen::MatrixXcd det_now{Eigen::Index(nd), Eigen::Index(nt)};
    for (std::size_t n2 = 0; n2 < nd; ++n2)
      det_now.row(Eigen::Index(n2)) = us.row(ws.det_voxel[n2]);
    settled = true;
    for (Eigen::Index m = 0; m < det_now.cols(); ++m) {
      const double ref = det_now.col(m).norm();
      if (rhs_norms[m] == 0.0) continue;
      if ((det_now.col(m) - det_prev.col(m)).norm() >
          tol * std::max(ref, 1e-300))
        settled = false;
    }
    det_prev.swap(det_now);
  }
  if (!settled)  // stalled contraction: fall back to direct solves
    for (Eigen::Index m = 0; m < Eigen::Index(nt); ++m)
      if (rhs_norms[m] != 0.0)
        us.col(m) = solve(op1, Eigen::VectorXcd(rhs.col(m)), opts);

  MultiStaticMatrix out;
  out.data.resize(Eigen::Index(nd), Eigen::Index(nt));
  out.separation.resize(nd * nt);
  for (std::size_t m = 0; m < nt; ++m)
    for (std::size_t n2 = 0; n2 < nd; ++n2) {
      out.data(Eigen::Index(n2), Eigen::Index(m)) =
          us(ws.det_voxel[n2], Eigen::Index(m));
      const Vec3& t = config.sources[m];
      const Vec3& d = config.detectors[n2];
      const double dx = t[0] - d[0], dy = t[1] - d[1], dz = t[2] - d[2];
      out.separation[n2 * nt + m] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  return out;
}

Eigen::MatrixXcd born_jacobian(const OpticalMedium& background,
                               const SourceDetectorConfig& config,
                               double reff_override, const SolveOptions& opts) {
  const VoxelGrid& g = background.grid;
  const double omega = 2.0 * M_PI * config.modulation_frequency_hz;
  DiffusionOperator op0 = assemble_operator(background, omega, reff_override);

  const std::size_t nt = config.sources.size();
  const std::size_t nd = config.detectors.size();
  const std::int64_t nvox = g.voxel_count();

  // N_t incident fields and N_d detector Green's functions (reciprocity:
  // G0(d_n, x) = G0(x, d_n) for the complex-symmetric operator).
  std::vector<Eigen::VectorXcd> u0(nt), gd(nd);
  for (std::size_t m = 0; m < nt; ++m) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nvox);
    rhs[g.nearest_voxel(config.sources[m])] =
        config.source_intensity / g.voxel_volume();
    u0[m] = solve(op0, rhs, opts);
  }
  for (std::size_t n = 0; n < nd; ++n)
    gd[n] = green_function(op0, config.detectors[n], opts);

  const double vvox = g.voxel_volume();
  Eigen::MatrixXcd jac(Eigen::Index(nd * nt), Eigen::Index(nvox));
  for (std::size_t n = 0; n < nd; ++n)
    for (std::size_t m = 0; m < nt; ++m)
      jac.row(Eigen::Index(n * nt + m)) =
          (-vvox) * gd[n].cwiseProduct(u0[m]).transpose();
  return jac;
}

double lippman_schwinger_residual(const FluenceField& u, const FluenceField& u0,
                                  const DeltaMuVolume& delta_mu,
                                  const Eigen::MatrixXcd& green_columns) {
  const double vvox = delta_mu.grid.voxel_volume();
  Eigen::VectorXcd acc = u - u0;
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < delta_mu.values.size(); ++i) {
    if (delta_mu.values[i] == 0.0) continue;
    if (col >= green_columns.cols())
      throw std::invalid_argument(
          "lippman_schwinger_residual: green table too small");
    acc += green_columns.col(col) * (delta_mu.values[i] * u[Eigen::Index(i)] *
                                     vvox);
    ++col;
  }
  return acc.norm() / u0.norm();
}

Complex infinite_medium_green(double r, double mu, double musp, double omega,
                              double refractive_index) {
  const double d = 1.0 / (3.0 * (mu + musp));
  const double c0 = kSpeedOfLightVacuum / refractive_index;
  const Complex kappa = std::sqrt(Complex(mu, -omega / c0) / d);
  return std::exp(-kappa * r) / (4.0 * M_PI * d * r);
}

}  // namespace dot
