#include "dot/recon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dot {
namespace {

// CG on the regularized normal equations (Re(J^H J) + diag(reg)) x = b,
// matrix-free in J.
Eigen::VectorXd cg_normal(const Eigen::MatrixXcd& jac,
                          const Eigen::VectorXd& reg_diag,
                          const Eigen::VectorXd& b, int max_iterations,
                          double tolerance) {
  const auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXcd jx = jac * x.cast<Complex>();
    return (jac.adjoint() * jx).real() + reg_diag.cwiseProduct(x);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  const double b2 = b.squaredNorm();
  if (b2 == 0.0) return x;
  for (int it = 0; it < max_iterations; ++it) {
    if (rs <= tolerance * tolerance * b2) break;
    const Eigen::VectorXd ap = apply(p);
    const double denom = p.dot(ap);
    if (denom <= 0.0) break;
    const double alpha = rs / denom;
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return x;
}

bool stalled(const std::vector<double>& history, int window) {
  if (int(history.size()) <= window) return false;
  const double best_before =
      *std::min_element(history.begin(), history.end() - window);
  for (auto it = history.end() - window; it != history.end(); ++it)
    if (*it < best_before) return false;
  return true;
}

}  // namespace

double lambda_rule(const Eigen::MatrixXcd& jacobian, double c) {
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < jacobian.cols(); ++i)
    max_diag = std::max(max_diag, jacobian.col(i).squaredNorm());
  if (max_diag == 0.0)
    throw std::invalid_argument("lambda_rule: zero Jacobian");
  return c * max_diag;
}

Eigen::VectorXcd flatten_pairs(const MultiStaticMatrix& msd,
                               const SourceDetectorConfig& config,
                               const std::vector<std::pair<int, int>>& pairs) {
  (void)config;
  Eigen::VectorXcd g(Eigen::Index(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k)
    g[Eigen::Index(k)] = msd.data(pairs[k].first, pairs[k].second);
  return g;
}

Eigen::MatrixXcd restrict_rows(const Eigen::MatrixXcd& jacobian, int n_sources,
                               const std::vector<std::pair<int, int>>& pairs) {
  Eigen::MatrixXcd out(Eigen::Index(pairs.size()), jacobian.cols());
  for (std::size_t k = 0; k < pairs.size(); ++k)
    out.row(Eigen::Index(k)) =
        jacobian.row(Eigen::Index(pairs[k].first) * n_sources +
                     pairs[k].second);
  return out;
}

ReconResult lm_reconstruct(const Eigen::VectorXcd& data,
                           const OpticalMedium& background,
                           const SourceDetectorConfig& config,
                           const std::vector<std::pair<int, int>>& pairs,
                           const LMConfig& cfg, double reff_override) {
  const std::int64_t nvox = background.grid.voxel_count();
  const int n_sources = int(config.sources.size());

  ReconResult result;
  result.delta_mu.grid = background.grid;
  result.delta_mu.values.assign(std::size_t(nvox), 0.0);

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(nvox);
  double initial_residual = -1.0;

  for (int outer = 1; outer <= cfg.max_outer_iterations; ++outer) {
    result.iterations_used = outer;

    DeltaMuVolume current;
    current.grid = background.grid;
    current.values.assign(delta.data(), delta.data() + nvox);

    const MultiStaticMatrix model =
        multistatic(background, current, config, reff_override);
    const Eigen::VectorXcd r = data - flatten_pairs(model, config, pairs);
    const double res = r.norm();
    result.residual_history.push_back(res);
    if (initial_residual < 0.0) initial_residual = res;
    if (res > 10.0 * initial_residual)
      throw std::runtime_error("lm_reconstruct: residual diverged");
    if (stalled(result.residual_history, cfg.stall_window)) {
      result.converged = true;
      break;
    }
    if (res == 0.0) {
      result.converged = true;
      break;
    }

    // Re-linearize about the current medium estimate (distorted Born).
    OpticalMedium current_medium = background;
    for (std::int64_t i = 0; i < nvox; ++i)
      current_medium.mu[std::size_t(i)] += delta[i];
    const Eigen::MatrixXcd jac = restrict_rows(
        born_jacobian(current_medium, config, reff_override), n_sources, pairs);

    const double lambda = lambda_rule(jac, cfg.lambda_constant);
    const Eigen::VectorXd rhs = (jac.adjoint() * r).real();
    const Eigen::VectorXd step =
        cg_normal(jac, Eigen::VectorXd::Constant(nvox, lambda), rhs,
                  cfg.cg_max_iterations, cfg.cg_tolerance);
    delta = (delta + step).cwiseMax(0.0);
  }

  result.delta_mu.values.assign(delta.data(), delta.data() + nvox);
  return result;
}

Eigen::VectorXd mm_solve(const Eigen::MatrixXcd& jacobian,
                         const Eigen::VectorXcd& data, const SparseConfig& cfg,
                         double lambda, std::vector<double>* residuals) {
  const Eigen::Index nvox = jacobian.cols();
  const Eigen::VectorXd rhs = (jacobian.adjoint() * data).real();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nvox);
  for (int stage = 0; stage < cfg.stages; ++stage) {
    const double lambda_k = lambda * std::pow(cfg.cooling_factor, stage);
    for (int inner = 0; inner < cfg.inner_iterations; ++inner) {
      // Majorizer weights of the l_p penalty at the current iterate.
      Eigen::VectorXd reg(nvox);
      for (Eigen::Index i = 0; i < nvox; ++i) {
        const double w =
            cfg.p *
            std::pow(x[i] * x[i] + cfg.epsilon_smoothing, 0.5 * cfg.p - 1.0);
        reg[i] = 0.5 * lambda_k * w;
      }
      x = cg_normal(jacobian, reg, rhs, cfg.cg_max_iterations,
                    cfg.cg_tolerance);
    }
    if (residuals)
      residuals->push_back((data - jacobian * x.cast<Complex>()).norm());
  }
  return x;
}

ReconResult mm_sparse_reconstruct(const Eigen::VectorXcd& data,
                                  const OpticalMedium& background,
                                  const SourceDetectorConfig& config,
                                  const std::vector<std::pair<int, int>>& pairs,
                                  const SparseConfig& cfg,
                                  double reff_override) {
  if (cfg.p != 1 && cfg.p != 2)
    throw std::invalid_argument("mm_sparse_reconstruct: p must be 1 or 2");
  const int n_sources = int(config.sources.size());
  const Eigen::MatrixXcd jac = restrict_rows(
      born_jacobian(background, config, reff_override), n_sources, pairs);
  const double lambda = lambda_rule(jac, cfg.lambda_constant);

  ReconResult result;
  result.delta_mu.grid = background.grid;
  std::vector<double> residuals;
  Eigen::VectorXd x = mm_solve(jac, data, cfg, lambda, &residuals);
  x = x.cwiseMax(0.0);
  result.delta_mu.values.assign(x.data(), x.data() + x.size());
  result.residual_history =
      residuals.empty() ? std::vector<double>{(data - jac * x.cast<Complex>()).norm()}
                        : residuals;
  result.iterations_used = cfg.stages * cfg.inner_iterations;
  result.converged = true;
  return result;
}

}  // namespace dot
